//! `mispro`: mispronunciation detection experiments from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mispro::downstream::{load_checkpoint, save_checkpoint, Approach, Checkpoint, EpochRecord, PhoneScore};
use mispro::featureio::{load_corpus, validate_manifest, DatasetManifest};
use mispro::metrics::{format_score_dump, read_score_dump, render_table, EvalReport};
use mispro::protocol::{self, score_sealed, score_utterances, ExperimentSpec, LabelVault};
use mispro::synth::{gen_corpus, SynthSpec};
use mispro::util::{atomic_write, sha256_hex};
use mispro::{Error, ErrorKind, Result};

const CONFIG_DIR_ENV: &str = "MISPRO_CONFIG_DIR";

#[derive(Parser)]
#[command(name = "mispro", version, about = "Phone-level mispronunciation detection experiments")]
struct Cli {
    /// Worker threads; 1 gives bitwise-reproducible runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// Experiment spec (TOML). Relative paths are also looked up in
    /// $MISPRO_CONFIG_DIR; without this flag $MISPRO_CONFIG_DIR/experiment.toml is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a spec value, e.g. `--set train.learning_rate=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for every stochastic step; same as `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving all outputs.
    #[arg(long, default_value = "run")]
    run_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with known optimal cost.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Generator settings (TOML); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate manifests and print label counts.
    Ingest {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Train the phone-recognition probe on native data.
    TrainPr(ExperimentArgs),
    /// Train the detection probe on the full labeled dev split.
    TrainMd {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Epoch count; defaults to train.max_epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Write per-phone scores of one split.
    Score {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
        /// Score the native manifest instead of the non-native one.
        #[arg(long)]
        native: bool,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Pooled dev scores (from `crossval`) for threshold selection;
        /// otherwise the checkpoint scores the dev split itself.
        #[arg(long)]
        dev_scores: Option<PathBuf>,
    },
    /// K-fold cross-validation on dev, then a final model on all of dev.
    Crossval(ExperimentArgs),
    /// Print a report file as a table.
    Report { report: PathBuf },
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn config_path(given: Option<&Path>) -> Result<PathBuf> {
    let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
    match (given, dir) {
        (Some(p), dir) => {
            if p.is_file() || p.is_absolute() {
                return Ok(p.to_path_buf());
            }
            match dir.map(|d| d.join(p)).filter(|c| c.is_file()) {
                Some(c) => Ok(c),
                None => Ok(p.to_path_buf()),
            }
        }
        (None, Some(d)) => Ok(d.join("experiment.toml")),
        (None, None) => Err(Error::Config(format!("no --config given and {CONFIG_DIR_ENV} is not set"))),
    }
}

fn load_spec(args: &ExperimentArgs) -> Result<ExperimentSpec> {
    let path = config_path(args.config.as_deref())?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    ExperimentSpec::load(&path, &overrides)
}

fn require_checkpoint(p: &Option<PathBuf>) -> Result<Checkpoint> {
    let p = p
        .as_ref()
        .ok_or_else(|| Error::Config("--checkpoint is required".into()))?;
    if !p.is_file() {
        return Err(Error::Config(format!("checkpoint {} not found", p.display())));
    }
    load_checkpoint(p)
}

fn header(provenance: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in provenance {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out
}

fn write_scores(path: &Path, provenance: &BTreeMap<String, String>, scores: &[PhoneScore]) -> Result<()> {
    let text = header(provenance) + &format_score_dump(scores);
    atomic_write(path, text.as_bytes())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn save_model(run_dir: &Path, ck: &Checkpoint, trace: &[EpochRecord]) -> Result<()> {
    save_checkpoint(ck, &run_dir.join("model.mpkp"))?;
    write_json(&run_dir.join("trace.json"), &trace)?;
    log::info!("wrote {}", run_dir.join("model.mpkp").display());
    Ok(())
}

fn ck_provenance(ck: &Checkpoint) -> BTreeMap<String, String> {
    let mut p = ck.provenance.clone();
    p.insert(
        "checkpoint_sha256".into(),
        sha256_hex(&mispro::downstream::encode_checkpoint(ck)),
    );
    p
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            out,
            config,
            overrides,
            seed,
        } => {
            let mut table: toml::Table = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => toml::Table::new(),
            };
            let mut overrides = overrides;
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            protocol::apply_overrides(&mut table, &overrides)?;
            let spec: SynthSpec = toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("synth settings: {e}")))?;
            let o = gen_corpus(&spec, &out)?;
            println!(
                "wrote {} utterances ({} correct, {} mispronounced targets) to {}",
                o.summary.utterances,
                o.summary.positives,
                o.summary.negatives,
                out.display()
            );
            println!("optimal cost {:.4}", o.summary.bayes_cost);
        }
        Command::Ingest { manifests } => {
            for path in manifests {
                let m = DatasetManifest::load(&path)?;
                let r = validate_manifest(&m)?;
                println!(
                    "{}: corpus {} utterances {} speakers {} correct {} mispronounced {} ignored {}",
                    path.display(),
                    r.corpus,
                    r.utterances,
                    r.speakers,
                    r.positives,
                    r.negatives,
                    r.ignored
                );
                for (split, n) in &r.per_split {
                    println!("  split {split}: {n} utterances");
                }
            }
        }
        Command::TrainPr(args) => {
            let spec = load_spec(&args)?;
            if spec.approach != Approach::Pr {
                return Err(Error::Config("train-pr needs approach = \"pr\"".into()));
            }
            let (ck, trace) = protocol::train_pr(&spec)?;
            save_model(&args.run_dir, &ck, &trace)?;
        }
        Command::TrainMd { exp, epochs } => {
            let spec = load_spec(&exp)?;
            if spec.approach != Approach::Md {
                return Err(Error::Config("train-md needs approach = \"md\"".into()));
            }
            let (ck, trace) = protocol::train_md(&spec, epochs.unwrap_or(spec.train.max_epochs))?;
            save_model(&exp.run_dir, &ck, &trace)?;
        }
        Command::Score {
            exp,
            checkpoint,
            split,
            native,
        } => {
            let spec = load_spec(&exp)?;
            let ck = require_checkpoint(&checkpoint)?;
            let manifest = if native { spec.native_manifest()? } else { spec.nonnative_manifest()? };
            let utts = load_corpus(&manifest, &[split.as_str()], spec.train.layer_norm)?;
            let scores = if split == spec.data.test_split && !native {
                let (sealed, vault) = LabelVault::seal(utts);
                vault.reveal(score_sealed(&ck.probe, &sealed)?)?
            } else {
                score_utterances(&ck.probe, &utts.iter().collect::<Vec<_>>())?
            };
            let path = exp.run_dir.join(format!("scores_{split}.txt"));
            write_scores(&path, &ck_provenance(&ck), &scores)?;
            println!("wrote {} scores to {}", scores.len(), path.display());
        }
        Command::Eval {
            exp,
            checkpoint,
            dev_scores,
        } => {
            let spec = load_spec(&exp)?;
            let ck = require_checkpoint(&checkpoint)?;
            let dev = dev_scores.map(|p| read_score_dump(&p)).transpose()?;
            let ev = protocol::evaluate_checkpoint(&spec, &ck, dev)?;
            let dir = &exp.run_dir;
            write_json(&dir.join("thresholds.json"), &ev.thresholds)?;
            write_scores(&dir.join("test_scores.txt"), &ev.report.provenance, &ev.test_scores)?;
            atomic_write(&dir.join("report.json"), ev.report.to_json().as_bytes())?;
            let table = render_table(&ev.report);
            atomic_write(&dir.join("report.txt"), table.as_bytes())?;
            print!("{table}");
        }
        Command::Crossval(args) => {
            let spec = load_spec(&args)?;
            let cv = protocol::crossval_md(&spec)?;
            let dir = &args.run_dir;
            atomic_write(&dir.join("folds.tsv"), cv.folds.to_text().as_bytes())?;
            write_json(&dir.join("crossval.json"), &cv.summary)?;
            write_scores(&dir.join("dev_scores.txt"), &ck_provenance(&cv.checkpoint), &cv.dev_scores)?;
            save_model(dir, &cv.checkpoint, &cv.trace)?;
            println!(
                "selected {} epochs (pooled macro MinCost {:.4}); final model in {}",
                cv.summary.best_epoch,
                cv.summary.epoch_cost[cv.summary.best_epoch - 1],
                dir.join("model.mpkp").display()
            );
        }
        Command::Report { report } => {
            let text = std::fs::read_to_string(&report).map_err(|e| Error::Config(format!("{}: {e}", report.display())))?;
            print!("{}", render_table(&EvalReport::from_json(&text)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

//! Experiment orchestration: folds, cross-validation, threshold selection
//! and complete PR / MD runs.
//!
//! A run never looks at test labels until test scoring is finished: test
//! utterances are sealed in a [`LabelVault`] right after loading.

mod crossval;
mod folds;
mod vault;

pub use crossval::{crossval_scores, new_probe, pooled_cost, select_thresholds, CrossvalOutcome, CrossvalSummary};
pub use folds::{make_folds, FoldPlan, Grouping};
pub use vault::{score_sealed, score_utterances, LabelVault, SealedUtterance, UnlabeledScore};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::downstream::{encode_checkpoint, train, Approach, Checkpoint, EpochRecord, PhoneScore, TrainConfig};
use crate::error::{Error, Result};
use crate::featureio::{load_corpus, DatasetManifest, Utterance};
use crate::metrics::{evaluate, EvalConfig, EvalReport, ScoredSet, ThresholdSource, ThresholdTable};
use crate::phoneset::PhoneInventory;
use crate::util::sha256_hex;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSpec {
    /// Non-native manifest with labeled dev and test splits.
    pub nonnative: PathBuf,
    /// Native manifest for PR training; unused by MD.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub native: Option<PathBuf>,
    /// Custom inventory file; the built-in 40-phone set otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inventory: Option<PathBuf>,
    pub dev_split: String,
    pub test_split: String,
    pub native_train_split: String,
    pub native_dev_split: String,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            nonnative: PathBuf::from("nonnative.toml"),
            native: None,
            inventory: None,
            dev_split: "dev".into(),
            test_split: "test".into(),
            native_train_split: "train".into(),
            native_dev_split: "dev".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoldSpec {
    pub k: usize,
    pub grouping: Grouping,
    /// Published fold list (`speaker_id<TAB>fold`) used verbatim instead
    /// of a seeded assignment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list: Option<PathBuf>,
}

impl Default for FoldSpec {
    fn default() -> Self {
        Self {
            k: 6,
            grouping: Grouping::BySpeaker,
            list: None,
        }
    }
}

/// An experiment, stored as TOML. Relative paths resolve against the
/// directory of the experiment file. `seed` drives training, folds and the
/// bootstrap.
///
/// ```toml
/// approach = "md"
/// upstream = "wavlm-large"
/// seed = 7
///
/// [data]
/// nonnative = "nonnative.toml"
///
/// [folds]
/// k = 6
///
/// [train]
/// learning_rate = 0.001
/// max_epochs = 20
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub approach: Approach,
    #[serde(default)]
    pub upstream: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub folds: FoldSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty override key {key:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Applies `key=value` overrides (dotted keys, TOML literals; bare words
/// are taken as strings).
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        set_dotted(table, key.trim(), value)?;
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn parse(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("experiment spec: {e}")))?;
        apply_overrides(&mut table, overrides)?;
        let mut spec: ExperimentSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("experiment spec: {e}")))?;
        spec.base_dir = base_dir.to_path_buf();
        spec.train.mode = spec.approach;
        spec.train.seed = spec.seed;
        spec.eval.seed = spec.seed;
        spec.train.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Config(format!("experiment spec {} not found", path.display())));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides, path.parent().unwrap_or(Path::new("")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn inventory(&self) -> Result<PhoneInventory> {
        match &self.data.inventory {
            Some(p) => PhoneInventory::load(&self.resolve(p)),
            None => Ok(PhoneInventory::default()),
        }
    }

    pub fn nonnative_manifest(&self) -> Result<DatasetManifest> {
        DatasetManifest::load(&self.resolve(&self.data.nonnative))
    }

    pub fn native_manifest(&self) -> Result<DatasetManifest> {
        let p = self
            .data
            .native
            .as_ref()
            .ok_or_else(|| Error::Config("PR needs data.native, a native frame-labeled manifest".into()))?;
        DatasetManifest::load(&self.resolve(p))
    }

    /// Provenance shared by every artifact of this experiment: no absolute
    /// paths, so reruns elsewhere produce identical files.
    pub fn provenance(&self) -> Result<BTreeMap<String, String>> {
        let mut p = BTreeMap::new();
        p.insert("tool_version".into(), TOOL_VERSION.into());
        p.insert("approach".into(), self.approach.to_string());
        p.insert("upstream".into(), self.upstream.clone());
        p.insert("seed".into(), self.seed.to_string());
        p.insert("config_sha256".into(), sha256_hex(self.to_toml().as_bytes()));
        let hash_file = |path: &Path| -> Result<String> {
            let full = self.resolve(path);
            Ok(sha256_hex(&std::fs::read(&full).map_err(|e| Error::io(&full, e))?))
        };
        p.insert("nonnative_manifest_sha256".into(), hash_file(&self.data.nonnative)?);
        if let (Approach::Pr, Some(native)) = (self.approach, &self.data.native) {
            p.insert("native_manifest_sha256".into(), hash_file(native)?);
        }
        Ok(p)
    }

    fn load_split(&self, manifest: &DatasetManifest, split: &str) -> Result<Vec<Utterance>> {
        let utts = load_corpus(manifest, &[split], self.train.layer_norm)?;
        if utts.is_empty() {
            return Err(Error::Config(format!("manifest {} has no {split:?} utterances", manifest.corpus)));
        }
        Ok(utts)
    }

    fn labeled_dev(&self) -> Result<Vec<Utterance>> {
        let manifest = self.nonnative_manifest()?;
        if let Some(e) = manifest.entries_in(&self.data.dev_split).find(|e| e.annotation.is_none()) {
            return Err(Error::Config(format!(
                "dev utterance {} has no annotation; non-native dev data must be labeled",
                e.utt_id
            )));
        }
        self.load_split(&manifest, &self.data.dev_split)
    }
}

fn refs(utts: &[Utterance]) -> Vec<&Utterance> {
    utts.iter().collect()
}

fn checkpoint(spec: &ExperimentSpec, probe: crate::downstream::LinearProbe, config: TrainConfig, epochs: usize) -> Result<Checkpoint> {
    let mut provenance = spec.provenance()?;
    provenance.insert("epochs".into(), epochs.to_string());
    Ok(Checkpoint {
        probe,
        config,
        provenance,
    })
}

/// Trains the PR probe on native data; the returned probe is the epoch with
/// the lowest native dev loss.
pub fn train_pr(spec: &ExperimentSpec) -> Result<(Checkpoint, Vec<EpochRecord>)> {
    let inventory = spec.inventory()?;
    let native = spec.native_manifest()?;
    let train_utts = spec.load_split(&native, &spec.data.native_train_split)?;
    let dev_utts = spec.load_split(&native, &spec.data.native_dev_split)?;
    let (tr, dv) = (refs(&train_utts), refs(&dev_utts));
    let train_ex = crossval::examples(&tr, &inventory)?;
    let dev_ex = crossval::examples(&dv, &inventory)?;
    let probe = new_probe(&tr, &inventory, &spec.train)?;
    let outcome = train(probe, &train_ex, Some(&dev_ex), &spec.train, |_, _| Ok(()))?;
    let ck = checkpoint(spec, outcome.probe, spec.train.clone(), outcome.best_epoch)?;
    Ok((ck, outcome.trace))
}

/// Trains the MD probe on the full labeled dev split for `epochs` epochs.
pub fn train_md(spec: &ExperimentSpec, epochs: usize) -> Result<(Checkpoint, Vec<EpochRecord>)> {
    let inventory = spec.inventory()?;
    let dev = spec.labeled_dev()?;
    let dv = refs(&dev);
    let ex = crossval::examples(&dv, &inventory)?;
    let mut config = spec.train.clone();
    config.max_epochs = epochs;
    let probe = new_probe(&dv, &inventory, &config)?;
    let outcome = train(probe, &ex, None, &config, |_, _| Ok(()))?;
    let ck = checkpoint(spec, outcome.probe, config, epochs)?;
    Ok((ck, outcome.trace))
}

#[derive(Debug, Clone)]
pub struct MdCrossval {
    pub folds: FoldPlan,
    pub summary: CrossvalSummary,
    /// Pooled dev scores at the selected epoch.
    pub dev_scores: Vec<PhoneScore>,
    /// Model retrained on the full dev split for the selected epoch count.
    pub checkpoint: Checkpoint,
    pub trace: Vec<EpochRecord>,
}

pub fn fold_plan(spec: &ExperimentSpec, dev: &[Utterance]) -> Result<FoldPlan> {
    let speakers: BTreeMap<String, String> = dev.iter().map(|u| (u.speaker_id.clone(), u.l1.clone())).collect();
    match &spec.folds.list {
        Some(p) => {
            let path = spec.resolve(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let plan = FoldPlan::parse(&text, spec.folds.grouping, &path)?;
            if let Some(s) = speakers.keys().find(|s| plan.fold(s).is_none()) {
                return Err(Error::Config(format!("{}: speaker {s} has no fold", path.display())));
            }
            Ok(plan)
        }
        None => make_folds(&speakers, spec.folds.k, spec.folds.grouping, spec.seed),
    }
}

/// Cross-validation on the dev split, epoch selection on pooled scores, then
/// a final model trained on all dev speakers.
pub fn crossval_md(spec: &ExperimentSpec) -> Result<MdCrossval> {
    if spec.approach != Approach::Md {
        return Err(Error::Config("crossval runs the MD approach; set approach = \"md\"".into()));
    }
    let inventory = spec.inventory()?;
    let dev = spec.labeled_dev()?;
    let folds = fold_plan(spec, &dev)?;
    let outcome = crossval_scores(&dev, &folds, &inventory, &spec.train, spec.eval.min_minority)?;
    let (checkpoint, trace) = train_md(spec, outcome.best_epoch)?;
    Ok(MdCrossval {
        folds,
        summary: outcome.summary(),
        dev_scores: outcome.best_scores().to_vec(),
        checkpoint,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub thresholds: ThresholdTable,
    pub dev_scores: Vec<PhoneScore>,
    pub test_scores: Vec<PhoneScore>,
}

/// Scores the test split with `ck` and evaluates it. Thresholds come from
/// `dev_scores` (pooled CV scores for MD) or, when absent, from scoring the
/// dev split with the same model.
pub fn evaluate_checkpoint(spec: &ExperimentSpec, ck: &Checkpoint, dev_scores: Option<Vec<PhoneScore>>) -> Result<Evaluation> {
    let manifest = spec.nonnative_manifest()?;
    let (dev_scores, source) = match dev_scores {
        Some(s) => (s, ThresholdSource::PooledCv),
        None => {
            let dev = spec.labeled_dev()?;
            (score_utterances(&ck.probe, &refs(&dev))?, ThresholdSource::Dev)
        }
    };
    let thresholds = select_thresholds(&ScoredSet::from_phone_scores(&dev_scores)?, spec.eval.min_minority, source)?;

    let (sealed, vault) = LabelVault::seal(spec.load_split(&manifest, &spec.data.test_split)?);
    let unlabeled = score_sealed(&ck.probe, &sealed)?;
    drop(sealed);
    let test_scores = vault.reveal(unlabeled)?;

    let mut report = evaluate(&ScoredSet::from_phone_scores(&test_scores)?, Some(&thresholds), &spec.eval)?;
    report.provenance = spec.provenance()?;
    report.provenance.insert("checkpoint_sha256".into(), sha256_hex(&encode_checkpoint(ck)));
    report.provenance.insert("corpus".into(), manifest.corpus.clone());
    report.provenance.insert("threshold_source".into(), source.to_string());
    Ok(Evaluation {
        report,
        thresholds,
        dev_scores,
        test_scores,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub evaluation: Evaluation,
    pub checkpoint: Checkpoint,
    pub trace: Vec<EpochRecord>,
    /// MD only.
    pub crossval: Option<MdCrossval>,
}

/// A complete PR or MD experiment ending in a test-set report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    match spec.approach {
        Approach::Pr => {
            let (checkpoint, trace) = train_pr(spec)?;
            let evaluation = evaluate_checkpoint(spec, &checkpoint, None)?;
            Ok(ExperimentOutcome {
                evaluation,
                checkpoint,
                trace,
                crossval: None,
            })
        }
        Approach::Md => {
            let cv = crossval_md(spec)?;
            let evaluation = evaluate_checkpoint(spec, &cv.checkpoint, Some(cv.dev_scores.clone()))?;
            Ok(ExperimentOutcome {
                evaluation,
                checkpoint: cv.checkpoint.clone(),
                trace: cv.trace.clone(),
                crossval: Some(cv),
            })
        }
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mispro::annotate::{align_sequences, phone_similarity, AlignConfig, AlignmentStep, FrameTarget, PronLabel};
use mispro::downstream::{md_loss, pr_loss, AdamState, LinearProbe, OptimizerConfig, OptimizerKind, PhoneScore};
use mispro::featureio::{combine_layers, combine_layers_backward, LayerWeighting, LayerWeights, UtteranceFeatures};
use mispro::metrics::{
    cost, evaluate, min_cost, one_minus_auc, EvalConfig, EvalReport, ScoredItem, ScoredSet, ThresholdSource,
};
use mispro::phoneset::{Phone, PhoneInventory};
use mispro::protocol::{run_experiment, select_thresholds, ExperimentOutcome, ExperimentSpec};
use mispro::synth::{
    bayes_cost, gen_corpus, oracle_align_score, oracle_fd_gradient, oracle_pairwise_auc, oracle_sweep_min_cost,
    SynthSpec,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let mut verdict = f();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&verdict, budget) {
            if elapsed > limit {
                verdict = Err(format!("{detail}; took {:.1?}, budget {:.0?}", elapsed, limit));
            }
        }
        self.report(id, name, elapsed, verdict);
    }

    fn report(&mut self, id: usize, name: &str, elapsed: Duration, verdict: Verdict) {
        match verdict {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({elapsed:.2?})"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL [{id}] {name}: {detail} ({elapsed:.2?})");
            }
        }
    }
}

// ---------------------------------------------------------------- metrics

fn scored_set(scores: &[f64], labels: &[bool], phone: Phone) -> ScoredSet {
    let items = scores
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (&score, &pos))| ScoredItem {
            score,
            label: if pos { PronLabel::Positive } else { PronLabel::Negative },
            speaker_id: format!("s{}", i % 9),
            phone,
        })
        .collect();
    ScoredSet::new(items).expect("finite scores")
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let phone = Phone::from_symbol("AE").unwrap();
    let mut worst_auc = 0.0f64;
    let mut tied_sets = 0;
    for set_no in 0..200 {
        let n = rng.random_range(2..=500);
        let levels = [3u32, 20, 200, 1_000_000][rng.random_range(0..4)];
        let p_pos = rng.random_range(0.05..0.95);
        let mut scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(p_pos)).collect();
        labels[0] = true;
        labels[1] = false;
        // explicit cross-class ties
        let k = rng.random_range(0..n);
        scores[1] = scores[k];
        scores[0] = scores[k];
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() < n {
            tied_sets += 1;
        }

        let set = scored_set(&scores, &labels, phone);
        let auc_err = (one_minus_auc(&set, phone).unwrap() - (1.0 - oracle_pairwise_auc(&scores, &labels))).abs();
        worst_auc = worst_auc.max(auc_err);
        ensure(auc_err < 1e-12, || format!("set {set_no}: 1-AUC off by {auc_err:e}"))?;

        let (thr, c) = min_cost(&set, phone).unwrap();
        let (othr, oc) = oracle_sweep_min_cost(&scores, &labels);
        ensure(c == oc, || format!("set {set_no}: min_cost {c} vs oracle {oc}"))?;
        let accept = |t: f64| scores.iter().map(|&s| s >= t).collect::<Vec<_>>();
        ensure(accept(thr) == accept(othr), || {
            format!("set {set_no}: thresholds {thr} and {othr} split the scores differently")
        })?;
    }
    Ok(format!("200 sets, {tied_sets} with ties, max 1-AUC error {worst_auc:.1e}, min_cost exact"))
}

fn cost_anchors(reports: &[(&str, &EvalReport)]) -> Verdict {
    ensure(cost(1.0, 0.0).ok() == Some(1.0), || "cost(1,0) != 1".into())?;
    ensure(cost(0.0, 1.0).ok() == Some(2.0), || "cost(0,1) != 2".into())?;
    let mut checked = 0;
    for (name, report) in reports {
        for m in &report.per_phone {
            let (Some(min), Some(act)) = (m.min_cost, m.act_cost) else {
                continue;
            };
            ensure(min <= act && act <= 2.0 && min <= 1.0, || {
                format!("{name} {}: min_cost {min}, act_cost {act}", m.phone)
            })?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no evaluated phones".into())?;
    Ok(format!("anchors hold; {checked} evaluated phones satisfy min <= act <= 2, min <= 1"))
}

// -------------------------------------------------------------- gradients

/// `|a - b| / max(|a|, |b|, FLOOR)`.
const REL_FLOOR: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR))
        .fold(0.0, f64::max)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

fn pr_targets(rng: &mut ChaCha8Rng, t: usize) -> Vec<Option<usize>> {
    let mut v: Vec<Option<usize>> = (0..t).map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..40))).collect();
    v[0] = Some(rng.random_range(0..40));
    v
}

fn md_selection(rng: &mut ChaCha8Rng, t: usize) -> Vec<Option<FrameTarget>> {
    let labels = [PronLabel::Positive, PronLabel::Negative, PronLabel::Ignored];
    let mut v: Vec<Option<FrameTarget>> = (0..t)
        .map(|_| {
            rng.random_bool(0.8).then(|| FrameTarget {
                ordinal: rng.random_range(0..40),
                label: labels[rng.random_range(0..3)],
            })
        })
        .collect();
    v[0] = Some(FrameTarget {
        ordinal: rng.random_range(0..40),
        label: labels[rng.random_range(0..2)],
    });
    v
}

fn random_features(rng: &mut ChaCha8Rng, l: usize, t: usize, d: usize) -> UtteranceFeatures {
    let data = (0..l * t * d).map(|_| rng.random_range(-2.0f32..2.0)).collect();
    UtteranceFeatures::new("u", "s", l, t, d, 50.0, data).unwrap()
}

enum Task {
    Pr(Vec<Option<usize>>),
    Md(Vec<Option<FrameTarget>>),
}

impl Task {
    fn loss(&self, logits: &Array2<f64>) -> (f64, Array2<f64>) {
        match self {
            Task::Pr(t) => pr_loss(logits, t).unwrap(),
            Task::Md(s) => md_loss(logits, s).unwrap(),
        }
    }
}

/// Returns the worst relative error of each of the four checks.
fn gradient_config(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let t = rng.random_range(1..=8);
    let d = rng.random_range(1..=6);
    let l = rng.random_range(1..=4);

    let logits = random_matrix(rng, t, 40, 3.0);
    let flat = logits.as_slice().unwrap().to_vec();
    let at = |v: &[f64]| Array2::from_shape_vec((t, 40), v.to_vec()).unwrap();

    let targets = pr_targets(rng, t);
    let (_, g) = pr_loss(&logits, &targets).unwrap();
    let fd = oracle_fd_gradient(|v| pr_loss(&at(v), &targets).unwrap().0, &flat, FD_STEP);
    let pr = rel_err(g.as_slice().unwrap(), &fd);

    let sel = md_selection(rng, t);
    let (_, g) = md_loss(&logits, &sel).unwrap();
    let fd = oracle_fd_gradient(|v| md_loss(&at(v), &sel).unwrap().0, &flat, FD_STEP);
    let md = rel_err(g.as_slice().unwrap(), &fd);

    let feats = random_features(rng, l, t, d);
    let mode = if rng.random_bool(0.5) { LayerWeighting::Softmax } else { LayerWeighting::Raw };
    let w = LayerWeights {
        logits: (0..l).map(|_| rng.random_range(-2.0..2.0)).collect(),
        mode,
    };
    let upstream = random_matrix(rng, t, d, 1.0);
    let analytic = combine_layers_backward(&feats, &w, &upstream).unwrap();
    let fd = oracle_fd_gradient(
        |v| {
            let w = LayerWeights { logits: v.to_vec(), mode };
            (combine_layers(&feats, &w).unwrap() * &upstream).sum()
        },
        &w.logits,
        FD_STEP,
    );
    let mix = rel_err(&analytic, &fd);

    let task = if rng.random_bool(0.5) { Task::Pr(pr_targets(rng, t)) } else { Task::Md(md_selection(rng, t)) };
    let mut probe = LinearProbe::new(PhoneInventory::default(), d, l, mode);
    probe.weights = random_matrix(rng, 40, d, 0.5);
    probe.bias = random_matrix(rng, 1, 40, 0.5).row(0).to_owned();
    probe.layers = w;
    let (mixed, out) = probe.utterance_logits(&feats).unwrap();
    let grads = probe.backward(&feats, &mixed, &task.loss(&out).1).unwrap();
    let n_w = probe.weights.len();
    let params: Vec<f64> = probe
        .weights
        .iter()
        .chain(probe.bias.iter())
        .chain(&probe.layers.logits)
        .copied()
        .collect();
    let analytic: Vec<f64> = grads
        .weights
        .iter()
        .chain(grads.bias.iter())
        .chain(&grads.layer_logits)
        .copied()
        .collect();
    let fd = oracle_fd_gradient(
        |v| {
            let mut p = probe.clone();
            p.weights.iter_mut().zip(&v[..n_w]).for_each(|(a, &b)| *a = b);
            p.bias.iter_mut().zip(&v[n_w..n_w + 40]).for_each(|(a, &b)| *a = b);
            p.layers.logits.copy_from_slice(&v[n_w + 40..]);
            task.loss(&p.utterance_logits(&feats).unwrap().1).0
        },
        &params,
        FD_STEP,
    );
    let chain = rel_err(&analytic, &fd);
    [pr, md, mix, chain]
}

fn gradient_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let errs = gradient_config(&mut rng);
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let names = ["pr_loss", "md_loss", "combine_layers", "probe chain"];
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(worst.iter().all(|&e| e < 1e-4), || format!("max rel. err. {detail}"))?;
    Ok(format!("100 configurations, max rel. err. {detail}"))
}

fn optimizer_anchor() -> Verdict {
    let cfg = OptimizerConfig {
        kind: OptimizerKind::AdamW,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
        weight_decay: 0.0,
    };
    let mut p = [0.0];
    AdamState::new(1).step(&mut p, &[1.0], 0.1, &cfg);
    ensure((p[0] - -0.1).abs() < 1e-8, || format!("first step gave {}", p[0]))?;
    let mut q = [0.7, -1.3];
    AdamState::new(2).step(&mut q, &[0.0, 0.0], 0.1, &cfg);
    ensure(q == [0.7, -1.3], || format!("zero-gradient step moved params to {q:?}"))?;
    Ok(format!("first step {:.10}, zero-gradient step is a no-op", p[0]))
}

// -------------------------------------------------------------- alignment

fn phones(symbols: &str) -> Vec<Phone> {
    symbols.split_whitespace().map(|s| Phone::from_symbol(s).unwrap()).collect()
}

fn alignment_suite() -> Verdict {
    use AlignmentStep::*;
    let cfg = AlignConfig::default();
    let cases: [(&str, &str, Vec<AlignmentStep>); 4] = [
        (
            "K AE T",
            "K AE T",
            vec![
                Match { target: 0, annotation: 0 },
                Match { target: 1, annotation: 1 },
                Match { target: 2, annotation: 2 },
            ],
        ),
        (
            "K AE T",
            "K EH T",
            vec![
                Match { target: 0, annotation: 0 },
                Substitution { target: 1, annotation: 1 },
                Match { target: 2, annotation: 2 },
            ],
        ),
        (
            "K AE T",
            "K T",
            vec![Match { target: 0, annotation: 0 }, Deletion { target: 1 }, Match { target: 2, annotation: 1 }],
        ),
        (
            "K AE T",
            "K AH AE T",
            vec![
                Match { target: 0, annotation: 0 },
                Addition { annotation: 1 },
                Match { target: 1, annotation: 2 },
                Match { target: 2, annotation: 3 },
            ],
        ),
    ];
    for (t, a, want) in &cases {
        let got = align_sequences(&phones(t), &phones(a), &cfg).steps;
        ensure(&got == want, || format!("[{t}] vs [{a}]: {got:?}"))?;
    }

    let all: Vec<Phone> = Phone::all().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for pair in 0..1000 {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Phone> {
            let n = rng.random_range(0..=12);
            (0..n).map(|_| all[rng.random_range(0..all.len())]).collect()
        };
        let (t, a) = (draw(&mut rng), draw(&mut rng));
        let got = align_sequences(&t, &a, &cfg);
        let sim = |i: usize, j: usize| phone_similarity(t[i], a[j]);
        let want = oracle_align_score(t.len(), a.len(), &sim, cfg.gap_penalty);
        let err = (got.score - want).abs();
        worst = worst.max(err);
        ensure(err < 1e-9, || format!("pair {pair}: DP {} vs enumeration {want}", got.score))?;

        let (mut ti, mut ai) = (0, 0);
        for s in &got.steps {
            let ok = match *s {
                Match { target, annotation } | Substitution { target, annotation } => {
                    let ok = target == ti && annotation == ai;
                    ti += 1;
                    ai += 1;
                    ok
                }
                Deletion { target } => {
                    ti += 1;
                    target == ti - 1
                }
                Addition { annotation } => {
                    ai += 1;
                    annotation == ai - 1
                }
            };
            ensure(ok, || format!("pair {pair}: steps not monotone"))?;
        }
        ensure(ti == t.len() && ai == a.len(), || format!("pair {pair}: steps do not cover both sequences"))?;
    }
    Ok(format!("4 unit cases; 1000 fuzz pairs match enumeration (max diff {worst:.1e})"))
}

// ------------------------------------------------------------ filter rule

fn filter_rule() -> Verdict {
    let build = |noise: f64| {
        let mut items = Vec::new();
        // (phone, positives, negatives, shift): minority counts 60, 10, 49, 50
        for (k, &(phone, n_pos, n_neg, shift)) in
            [("AA", 60, 60, 0.5), ("AE", 10, 500, 0.0), ("IY", 49, 60, -0.2), ("S", 50, 50, 0.9)].iter().enumerate()
        {
            let phone = Phone::from_symbol(phone).unwrap();
            let excluded = k == 1 || k == 2;
            let bump = if excluded { noise } else { 0.0 };
            for i in 0..n_pos {
                let score = i as f64 / n_pos as f64 + shift - bump * (i % 3) as f64;
                items.push(ScoredItem {
                    score,
                    label: PronLabel::Positive,
                    speaker_id: format!("s{}", i % 5),
                    phone,
                });
            }
            for i in 0..n_neg {
                items.push(ScoredItem {
                    score: i as f64 / n_neg as f64 + bump,
                    label: PronLabel::Negative,
                    speaker_id: format!("s{}", i % 5),
                    phone,
                });
            }
        }
        ScoredSet::new(items).unwrap()
    };
    let config = EvalConfig {
        bootstrap_replicates: 50,
        ..EvalConfig::default()
    };
    let eval = |set: &ScoredSet| {
        let thresholds = select_thresholds(set, config.min_minority, ThresholdSource::Dev).unwrap();
        (thresholds.clone(), evaluate(set, Some(&thresholds), &config).unwrap())
    };
    let (thresholds, base) = eval(&build(0.0));
    let (_, perturbed) = eval(&build(7.0));
    let included: Vec<&str> = base.per_phone.iter().filter(|m| m.included_in_macro).map(|m| m.phone.symbol()).collect();
    ensure(included == ["AA", "S"], || format!("included phones {included:?}"))?;
    let with_thr: Vec<&str> = thresholds.thresholds.keys().map(|p| p.symbol()).collect();
    ensure(with_thr == ["AA", "S"], || format!("thresholds for {with_thr:?}"))?;
    let mean = |f: &dyn Fn(&mispro::metrics::PhoneMetrics) -> Option<f64>| {
        base.per_phone.iter().filter(|m| m.included_in_macro).filter_map(f).sum::<f64>() / 2.0
    };
    ensure(base.macro_one_minus_auc.value == mean(&|m| m.one_minus_auc), || "macro 1-AUC".into())?;
    ensure(base.macro_min_cost.value == mean(&|m| m.min_cost), || "macro MinCost".into())?;
    let act = base.macro_act_cost.as_ref().map(|m| m.value);
    ensure(act == Some(mean(&|m| m.act_cost)), || "macro ActCost".into())?;
    let macros = |r: &EvalReport| {
        serde_json::to_string(&(&r.macro_one_minus_auc, &r.macro_min_cost, &r.macro_act_cost)).unwrap()
    };
    ensure(macros(&base) == macros(&perturbed), || "perturbing excluded phones moved a macro metric".into())?;
    let moved = base.per_phone.iter().zip(&perturbed.per_phone).any(|(a, b)| a.one_minus_auc != b.one_minus_auc);
    ensure(moved, || "perturbation did not reach the excluded phones".into())?;
    Ok("minority 10 and 49 excluded, 50 and 60 kept; excluded phones cannot move the macros".into())
}

// ------------------------------------------------------------ end to end

struct EndToEnd {
    bayes: f64,
    md: ExperimentOutcome,
    md_time: Duration,
    pr: ExperimentOutcome,
    pr_time: Duration,
}

fn end_to_end(dir: &Path) -> Result<EndToEnd, String> {
    let spec = SynthSpec::default();
    let start = Instant::now();
    let out = gen_corpus(&spec, dir).map_err(|e| e.to_string())?;
    let gen_time = start.elapsed();
    let run = |path: &Path| -> Result<(ExperimentOutcome, Duration), String> {
        let t = Instant::now();
        let exp = ExperimentSpec::load(path, &[]).map_err(|e| e.to_string())?;
        let outcome = run_experiment(&exp).map_err(|e| e.to_string())?;
        Ok((outcome, t.elapsed() + gen_time))
    };
    let (md, md_time) = run(&out.md_experiment)?;
    let (pr, pr_time) = run(&out.pr_experiment)?;
    Ok(EndToEnd {
        bayes: bayes_cost(&spec),
        md,
        md_time,
        pr,
        pr_time,
    })
}

fn pooled_cv_auc(dev_scores: &[PhoneScore]) -> Result<f64, String> {
    let set = ScoredSet::from_phone_scores(dev_scores).map_err(|e| e.to_string())?;
    let config = EvalConfig {
        bootstrap_replicates: 0,
        ..EvalConfig::default()
    };
    Ok(evaluate(&set, None, &config).map_err(|e| e.to_string())?.macro_one_minus_auc.value)
}

fn e2e_md(e: &EndToEnd) -> Verdict {
    let cv = e.md.crossval.as_ref().ok_or("MD run has no cross-validation")?;
    let auc = pooled_cv_auc(&cv.dev_scores)?;
    let act = e.md.evaluation.report.macro_act_cost.as_ref().ok_or("no macro ActCost")?.value;
    let detail = format!(
        "pooled CV 1-AUC {auc:.4}, macro ActCost {act:.4} vs optimal {:.4}, run {:.1?}",
        e.bayes, e.md_time
    );
    ensure(auc < 0.02 && (act - e.bayes).abs() <= 0.05, || detail.clone())?;
    ensure(e.md_time < Duration::from_secs(120), || format!("{detail}; over 2 min"))?;
    Ok(detail)
}

fn md_beats_pr(e: &EndToEnd) -> Verdict {
    let md = e.md.evaluation.report.macro_act_cost.as_ref().ok_or("no MD ActCost")?;
    let pr = e.pr.evaluation.report.macro_act_cost.as_ref().ok_or("no PR ActCost")?;
    let (Some(mci), Some(pci)) = (&md.ci, &pr.ci) else {
        return Err("missing bootstrap intervals".into());
    };
    let detail = format!(
        "MD {:.4} [{:.4}, {:.4}] vs PR {:.4} [{:.4}, {:.4}], B={}",
        md.value, mci.lower, mci.upper, pr.value, pci.lower, pci.upper, mci.replicates
    );
    ensure(mci.replicates == 1000 && pci.replicates == 1000, || format!("{detail}; expected B=1000"))?;
    ensure(md.value < pr.value && mci.upper < pci.lower, || detail.clone())?;
    let total = e.md_time + e.pr_time;
    ensure(total < Duration::from_secs(300), || format!("{detail}; took {total:.1?}"))?;
    Ok(detail)
}

// ------------------------------------------------------------ determinism

fn mispro(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mispro"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("mispro {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism(dir: &Path) -> Verdict {
    let corpus = dir.join("corpus");
    let c = corpus.to_str().unwrap();
    mispro(&["--jobs", "1", "synth", "--out", c, "--set", "dev_speakers=12", "--set", "test_speakers=6"])?;
    let config = corpus.join("md.toml");
    let mut reports = Vec::new();
    for name in ["run_a", "run_b"] {
        let run = dir.join(name);
        let (cfg, r) = (config.to_str().unwrap(), run.to_str().unwrap());
        mispro(&["--jobs", "1", "crossval", "--config", cfg, "--seed", "17", "--run-dir", r])?;
        let ck = run.join("model.mpkp");
        let dev = run.join("dev_scores.txt");
        mispro(&[
            "--jobs",
            "1",
            "eval",
            "--config",
            cfg,
            "--seed",
            "17",
            "--run-dir",
            r,
            "--checkpoint",
            ck.to_str().unwrap(),
            "--dev-scores",
            dev.to_str().unwrap(),
        ])?;
        reports.push(std::fs::read(run.join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || "report.json differs between runs".into())?;
    Ok(format!("two crossval + eval runs gave byte-identical report.json ({} bytes)", reports[0].len()))
}

fn main() {
    let mut suite = Suite { failures: 0 };
    let scratch = tempfile::tempdir().expect("temp dir");

    suite.run(1, "metric oracles", Some(Duration::from_secs(10)), metric_oracles);

    let e2e_start = Instant::now();
    let e2e = end_to_end(&scratch.path().join("e2e"));
    let e2e_elapsed = e2e_start.elapsed();

    match &e2e {
        Ok(e) => {
            let reports = [("md", &e.md.evaluation.report), ("pr", &e.pr.evaluation.report)];
            suite.run(2, "cost anchors", None, || cost_anchors(&reports));
        }
        Err(err) => suite.report(2, "cost anchors", e2e_elapsed, Err(format!("end-to-end runs failed: {err}"))),
    }
    suite.run(3, "gradient checks", Some(Duration::from_secs(30)), gradient_checks);
    suite.run(4, "optimizer anchor", None, optimizer_anchor);
    match &e2e {
        Ok(e) => {
            suite.report(5, "end-to-end MD", e.md_time, e2e_md(e));
            suite.report(6, "MD beats PR", e.md_time + e.pr_time, md_beats_pr(e));
        }
        Err(err) => {
            suite.report(5, "end-to-end MD", e2e_elapsed, Err(err.clone()));
            suite.report(6, "MD beats PR", e2e_elapsed, Err(err.clone()));
        }
    }
    suite.run(7, "alignment suite", Some(Duration::from_secs(30)), alignment_suite);
    suite.run(8, "determinism", None, || determinism(&scratch.path().join("det")));
    suite.run(9, "filter rule", None, filter_rule);

    println!("{} of 9 criteria failed", suite.failures);
    if suite.failures > 0 {
        std::process::exit(1);
    }
}

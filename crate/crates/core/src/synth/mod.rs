//! Synthetic corpora with a known optimum, plus brute-force oracles.
//!
//! Every frame of a target phone `p` carries the identity vector
//! `A e_p` on its own axis plus isotropic instance noise of scale `sigma`
//! shared by all frames of the instance. A mispronounced instance is
//! additionally shifted by `separation * sigma` along a private error axis of
//! `p`. Positives and native speech never move along error axes, so a probe
//! trained only for phone recognition has nothing to learn there, while a
//! probe trained on the labels can find the shift.
//!
//! On the error axis the two classes are unit-variance Gaussians (in units
//! of `sigma`) `separation` apart, so the best achievable `FPR + 2 FNR` is
//! available in closed form; see [`bayes_cost`].
//!
//! Layers are copies of the same activations with per-layer frame noise;
//! the layer whose noise level is zero is the clean one.

mod oracle;

pub use oracle::{oracle_align_score, oracle_fd_gradient, oracle_pairwise_auc, oracle_sweep_min_cost};

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::annotate::{format_annotations, format_spans, label_utterance, AlignConfig, AnnotationRecord, PronLabel, TargetPhoneInstance};
use crate::downstream::{Approach, TrainConfig};
use crate::error::{Error, Result};
use crate::featureio::{write_features, DatasetManifest, ManifestEntry, UtteranceFeatures};
use crate::metrics::EvalConfig;
use crate::phoneset::{Phone, Scheme, UnmappablePolicy};
use crate::protocol::{DataSpec, ExperimentSpec, FoldSpec, Grouping};
use crate::util::atomic_write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub dev_speakers: usize,
    pub test_speakers: usize,
    pub native_train_speakers: usize,
    pub native_dev_speakers: usize,
    /// Non-native speakers cycle through this many L1 tags.
    pub n_l1: usize,
    pub utterances_per_speaker: usize,
    pub phones_per_utterance: usize,
    /// Inclusive range of frames per phone.
    pub frames_per_phone: (usize, usize),
    pub dim: usize,
    pub n_layers: usize,
    /// Phones that appear as targets.
    pub phones: Vec<Phone>,
    pub error_prob: f64,
    /// Share of errors realized as deletions rather than substitutions.
    pub deletion_share: f64,
    /// Class distance along the error axis, in units of `sigma`.
    pub separation: f64,
    pub sigma: f64,
    /// Length of the phone identity vectors.
    pub identity_scale: f64,
    /// Independent per-frame noise on top of the instance noise, in units
    /// of `sigma`.
    pub frame_noise: f64,
    /// Extra per-frame noise of each layer, in units of `sigma`.
    pub layer_noise: Vec<f64>,
    pub frame_rate_hz: f32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            dev_speakers: 30,
            test_speakers: 10,
            native_train_speakers: 16,
            native_dev_speakers: 4,
            n_l1: 5,
            utterances_per_speaker: 12,
            phones_per_utterance: 10,
            frames_per_phone: (4, 8),
            dim: 16,
            n_layers: 3,
            phones: ["AA", "IY", "S", "T"].iter().map(|s| Phone::from_symbol(s).unwrap()).collect(),
            error_prob: 0.3,
            deletion_share: 0.2,
            separation: 6.0,
            sigma: 1.0,
            identity_scale: 4.0,
            frame_noise: 0.0,
            layer_noise: vec![0.5, 0.0, 0.25],
            frame_rate_hz: 50.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.error_prob) {
            return bad(format!("error_prob must lie in [0, 1], got {}", self.error_prob));
        }
        if !(0.0..=1.0).contains(&self.deletion_share) {
            return bad(format!("deletion_share must lie in [0, 1], got {}", self.deletion_share));
        }
        if self.phones.is_empty() || self.phones.iter().any(|p| p.is_silence()) {
            return bad("phones must be non-empty and exclude SIL".into());
        }
        if self.dim < 2 * self.phones.len() + 1 {
            return bad(format!("dim must be at least {} for {} phones", 2 * self.phones.len() + 1, self.phones.len()));
        }
        if self.n_layers == 0 || self.layer_noise.len() != self.n_layers {
            return bad("layer_noise needs one entry per layer".into());
        }
        let (lo, hi) = self.frames_per_phone;
        if lo == 0 || hi < lo {
            return bad("frames_per_phone must be a non-empty range of positive counts".into());
        }
        let finite = [self.sigma, self.separation, self.identity_scale, self.frame_noise]
            .iter()
            .chain(&self.layer_noise)
            .all(|v| v.is_finite());
        if !finite || self.sigma <= 0.0 || self.separation < 0.0 || self.n_l1 == 0 {
            return bad("noise levels must be finite, sigma positive, separation non-negative, n_l1 at least 1".into());
        }
        if self.phones_per_utterance == 0 || self.utterances_per_speaker == 0 {
            return bad("utterances and phones per utterance must be positive".into());
        }
        Ok(())
    }

    fn axis(&self, phone: Phone) -> usize {
        if phone.is_silence() {
            return self.phones.len();
        }
        self.phones.iter().position(|&p| p == phone).expect("target phone")
    }

    fn error_axis(&self, phone: Phone) -> usize {
        self.phones.len() + 1 + self.axis(phone)
    }
}

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn cost_at(spec: &SynthSpec, t: f64) -> f64 {
    let (lo, hi) = spec.frames_per_phone;
    let n = (hi - lo + 1) as f64;
    (lo..=hi)
        .map(|d| {
            let s = (1.0 + spec.frame_noise * spec.frame_noise / d as f64).sqrt();
            // accept as correct when the error-axis coordinate is below t
            let fpr = phi((t - spec.separation) / s);
            let fnr = 1.0 - phi(t / s);
            (fpr + 2.0 * fnr) / n
        })
        .sum()
}

/// Lowest `FPR + 2 FNR` reachable by thresholding the clean layer's span
/// mean along the error axis. Without frame noise this is
/// `Phi(ln2/D - D/2) + 2 Phi(-D/2 - ln2/D)` for separation `D`.
pub fn bayes_cost(spec: &SynthSpec) -> f64 {
    if spec.separation == 0.0 {
        return 1.0;
    }
    let (mut a, mut b) = (-10.0, spec.separation + 10.0);
    let steps = 4000;
    let mut best = (a, cost_at(spec, a));
    for k in 0..=steps {
        let t = a + (b - a) * k as f64 / steps as f64;
        let c = cost_at(spec, t);
        if c < best.1 {
            best = (t, c);
        }
    }
    let h = (b - a) / steps as f64;
    (a, b) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if cost_at(spec, x1) < cost_at(spec, x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    cost_at(spec, (a + b) / 2.0).min(best.1).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub spec: SynthSpec,
    pub bayes_cost: f64,
    pub positives: usize,
    pub negatives: usize,
    pub utterances: usize,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub nonnative_manifest: PathBuf,
    pub native_manifest: PathBuf,
    pub md_experiment: PathBuf,
    pub pr_experiment: PathBuf,
    pub summary: SynthSummary,
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    rng: ChaCha8Rng,
    substitutes: Vec<Phone>,
}

struct GeneratedUtterance {
    spans: Vec<TargetPhoneInstance>,
    record: AnnotationRecord,
    labels: Vec<PronLabel>,
    features: UtteranceFeatures,
}

impl Generator<'_> {
    fn gauss(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn utterance(&mut self, utt_id: &str, speaker: &str, native: bool) -> Result<GeneratedUtterance> {
        let spec = self.spec;
        let (lo, hi) = spec.frames_per_phone;
        let mut phones = vec![Phone::SIL];
        for _ in 0..spec.phones_per_utterance {
            phones.push(*spec.phones.choose(&mut self.rng).expect("phones validated"));
        }
        phones.push(Phone::SIL);

        let mut spans = Vec::with_capacity(phones.len());
        let mut t = 0;
        for &p in &phones {
            let d = self.rng.random_range(lo..=hi);
            spans.push(TargetPhoneInstance {
                utt_id: utt_id.to_string(),
                phone: p,
                start_frame: t,
                end_frame: t + d,
            });
            t += d;
        }

        let mut annotated = Vec::with_capacity(phones.len());
        for &p in &phones {
            if native || p.is_silence() || !self.rng.random_bool(spec.error_prob) {
                annotated.push(p);
            } else if !self.rng.random_bool(spec.deletion_share) {
                annotated.push(*self.substitutes.choose(&mut self.rng).expect("substitutes"));
            }
        }
        let record = AnnotationRecord {
            utt_id: utt_id.to_string(),
            target: phones.clone(),
            annotated,
        };
        // Labels come from the aligner, so the written files and the
        // generated features can never disagree.
        let labels: Vec<PronLabel> = label_utterance(&spans, (!native).then_some(&record), &AlignConfig::default())?
            .into_iter()
            .map(|l| l.label)
            .collect();

        let (n_frames, dim, n_layers) = (t, spec.dim, spec.n_layers);
        let mut base = vec![0.0f64; n_frames * dim];
        for (span, &label) in spans.iter().zip(&labels) {
            let mut mean = vec![0.0; dim];
            mean[spec.axis(span.phone)] = spec.identity_scale;
            if label == PronLabel::Negative {
                mean[spec.error_axis(span.phone)] = spec.separation * spec.sigma;
            }
            for m in mean.iter_mut() {
                *m += spec.sigma * self.gauss();
            }
            for f in span.start_frame..span.end_frame {
                for k in 0..dim {
                    let jitter = if spec.frame_noise > 0.0 {
                        spec.frame_noise * spec.sigma * self.gauss()
                    } else {
                        0.0
                    };
                    base[f * dim + k] = mean[k] + jitter;
                }
            }
        }
        let mut data = Vec::with_capacity(n_layers * base.len());
        for &noise in &spec.layer_noise {
            for &v in &base {
                let extra = if noise > 0.0 { noise * spec.sigma * self.gauss() } else { 0.0 };
                data.push((v + extra) as f32);
            }
        }
        let features = UtteranceFeatures::new(utt_id, speaker, n_layers, n_frames, dim, spec.frame_rate_hz, data)?;
        Ok(GeneratedUtterance {
            spans,
            record,
            labels,
            features,
        })
    }
}

/// Experiment settings that train well on the default corpus.
pub fn default_train_config(approach: Approach) -> TrainConfig {
    TrainConfig {
        mode: approach,
        learning_rate: 0.01,
        batch_size: 8,
        max_epochs: 15,
        ..TrainConfig::default()
    }
}

fn manifest(corpus: &str, entries: Vec<ManifestEntry>) -> DatasetManifest {
    DatasetManifest {
        corpus: corpus.into(),
        span_scheme: Scheme::Arpabet,
        annotation_scheme: Scheme::Arpabet,
        unmappable: UnmappablePolicy::Abort,
        entries,
        base_dir: PathBuf::new(),
    }
}

/// Writes features, spans, annotations and manifests under `out_dir`:
/// `nonnative.toml` (splits `dev` and `test`), `native.toml` (splits
/// `train` and `dev`, no annotations), plus ready-to-run `md.toml` and
/// `pr.toml` experiment specs and `synth.json`.
pub fn gen_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<SynthOutput> {
    spec.validate()?;
    let substitutes: Vec<Phone> = Phone::all()
        .filter(|p| !p.is_silence() && !spec.phones.contains(p))
        .collect();
    let mut gen = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        substitutes,
    };
    let mut summary = SynthSummary {
        spec: spec.clone(),
        bayes_cost: bayes_cost(spec),
        positives: 0,
        negatives: 0,
        utterances: 0,
    };

    let groups: [(&str, &str, usize, bool); 4] = [
        ("dev", "dev", spec.dev_speakers, false),
        ("test", "test", spec.test_speakers, false),
        ("nat", "train", spec.native_train_speakers, true),
        ("natdev", "dev", spec.native_dev_speakers, true),
    ];
    let mut nonnative = Vec::new();
    let mut native = Vec::new();
    let mut nonnative_spans = Vec::new();
    let mut native_spans = Vec::new();
    let mut records = Vec::new();
    for (prefix, split, n_speakers, is_native) in groups {
        for s in 0..n_speakers {
            let speaker = format!("{prefix}{s:02}");
            let l1 = if is_native { "en".to_string() } else { format!("L{}", s % spec.n_l1) };
            for u in 0..spec.utterances_per_speaker {
                let utt_id = format!("{speaker}_{u:03}");
                let g = gen.utterance(&utt_id, &speaker, is_native)?;
                let rel = PathBuf::from("feats").join(format!("{utt_id}.mpkf"));
                write_features(&g.features, &out_dir.join(&rel))?;
                if !is_native {
                    summary.positives += g.labels.iter().filter(|&&l| l == PronLabel::Positive).count();
                    summary.negatives += g.labels.iter().filter(|&&l| l == PronLabel::Negative).count();
                }
                summary.utterances += 1;
                let entry = ManifestEntry {
                    utt_id,
                    speaker: speaker.clone(),
                    l1: l1.clone(),
                    split: split.into(),
                    features: rel,
                    spans: PathBuf::from(if is_native { "native_spans.txt" } else { "nonnative_spans.txt" }),
                    annotation: (!is_native).then(|| PathBuf::from("nonnative_annotations.tsv")),
                };
                if is_native {
                    native_spans.extend(g.spans);
                    native.push(entry);
                } else {
                    nonnative_spans.extend(g.spans);
                    records.push(g.record);
                    nonnative.push(entry);
                }
            }
        }
    }
    atomic_write(&out_dir.join("nonnative_spans.txt"), format_spans(&nonnative_spans).as_bytes())?;
    atomic_write(&out_dir.join("native_spans.txt"), format_spans(&native_spans).as_bytes())?;
    atomic_write(&out_dir.join("nonnative_annotations.tsv"), format_annotations(&records).as_bytes())?;
    let nonnative_manifest = out_dir.join("nonnative.toml");
    let native_manifest = out_dir.join("native.toml");
    manifest("synthetic-nonnative", nonnative).save(&nonnative_manifest)?;
    manifest("synthetic-native", native).save(&native_manifest)?;

    let experiment = |approach: Approach| ExperimentSpec {
        approach,
        upstream: "synthetic".into(),
        seed: spec.seed,
        data: DataSpec {
            native: (approach == Approach::Pr).then(|| PathBuf::from("native.toml")),
            ..DataSpec::default()
        },
        folds: FoldSpec {
            k: 6.min(spec.dev_speakers.max(2)),
            grouping: Grouping::BySpeaker,
            list: None,
        },
        train: default_train_config(approach),
        eval: EvalConfig::default(),
        base_dir: PathBuf::new(),
    };
    let md_experiment = out_dir.join("md.toml");
    let pr_experiment = out_dir.join("pr.toml");
    atomic_write(&md_experiment, experiment(Approach::Md).to_toml().as_bytes())?;
    atomic_write(&pr_experiment, experiment(Approach::Pr).to_toml().as_bytes())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    atomic_write(&out_dir.join("synth.json"), json.as_bytes())?;
    Ok(SynthOutput {
        nonnative_manifest,
        native_manifest,
        md_experiment,
        pr_experiment,
        summary,
    })
}

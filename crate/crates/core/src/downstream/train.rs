use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{expand_to_frames, FrameTarget, LabeledTargetPhone};
use crate::downstream::loss::{md_loss_sum, pr_loss_sum};
use crate::downstream::optim::{AdamState, LrDecay, OptimizerConfig, OptimizerKind};
use crate::downstream::probe::{LinearProbe, ProbeGrads};
use crate::error::{Error, Result};
use crate::featureio::{LayerWeighting, Utterance, UtteranceFeatures};
use crate::phoneset::PhoneInventory;

/// Which task the probe is trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Frame-level phone recognition on native speech.
    Pr,
    /// Frame-level correct/incorrect detection on labeled non-native speech.
    Md,
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Approach::Pr => "pr",
            Approach::Md => "md",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchUnit {
    /// `batch_size` counts utterances.
    #[default]
    Utterances,
    /// `batch_size` is a minimum frame count; whole utterances are added
    /// until it is reached.
    Frames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mode: Approach,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub batch_unit: BatchUnit,
    pub max_epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_decay: Option<LrDecay>,
    pub seed: u64,
    pub layer_weighting: LayerWeighting,
    pub layer_norm: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        Self {
            mode: Approach::Md,
            optimizer: opt.kind,
            learning_rate: 1e-4,
            weight_decay: opt.weight_decay,
            beta1: opt.beta1,
            beta2: opt.beta2,
            eps: opt.eps,
            batch_size: 64,
            batch_unit: BatchUnit::Utterances,
            max_epochs: 30,
            lr_decay: None,
            seed: 0,
            layer_weighting: LayerWeighting::Softmax,
            layer_norm: false,
        }
    }
}

impl TrainConfig {
    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            kind: self.optimizer,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn rate_at(&self, epoch: usize) -> f64 {
        match self.lr_decay {
            Some(d) => d.rate_at(self.learning_rate, epoch),
            None => self.learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("optimizer betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Features plus per-frame supervision for one utterance.
#[derive(Debug, Clone)]
pub struct TrainExample<'a> {
    pub features: &'a UtteranceFeatures,
    pub frames: Vec<Option<FrameTarget>>,
}

impl<'a> TrainExample<'a> {
    pub fn from_utterance(u: &'a Utterance, inventory: &PhoneInventory) -> Result<Self> {
        let labeled: Vec<LabeledTargetPhone> = u
            .targets
            .iter()
            .zip(&u.labels)
            .map(|(instance, &label)| LabeledTargetPhone {
                instance: instance.clone(),
                label,
            })
            .collect();
        Ok(Self {
            features: &u.features,
            frames: expand_to_frames(&labeled, u.features.n_frames, inventory)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based count of completed epochs.
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub probe: LinearProbe,
    pub trace: Vec<EpochRecord>,
    /// Number of epochs behind the returned probe.
    pub best_epoch: usize,
}

fn example_loss(probe: &LinearProbe, ex: &TrainExample<'_>, mode: Approach, with_grad: bool) -> Result<(f64, usize, Option<ProbeGrads>)> {
    let (mixed, logits) = probe.utterance_logits(ex.features)?;
    let out = match mode {
        Approach::Pr => {
            let targets: Vec<Option<usize>> = ex.frames.iter().map(|f| f.map(|f| f.ordinal)).collect();
            pr_loss_sum(&logits, &targets)
        }
        Approach::Md => md_loss_sum(&logits, &ex.frames),
    };
    let grads = if with_grad && out.count > 0 {
        Some(probe.backward(ex.features, &mixed, &out.grad)?)
    } else {
        None
    };
    Ok((out.loss, out.count, grads))
}

/// Mean frame loss over a set of examples.
pub(crate) fn mean_loss(probe: &LinearProbe, examples: &[TrainExample<'_>], mode: Approach) -> Result<f64> {
    let parts: Vec<(f64, usize)> = examples
        .par_iter()
        .map(|ex| example_loss(probe, ex, mode, false).map(|(l, c, _)| (l, c)))
        .collect::<Result<_>>()?;
    let (loss, count) = parts.iter().fold((0.0, 0usize), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    if count == 0 {
        return Err(Error::NoSelectedFrames);
    }
    Ok(loss / count as f64)
}

fn make_batches(order: &[usize], examples: &[TrainExample<'_>], config: &TrainConfig) -> Vec<Vec<usize>> {
    match config.batch_unit {
        BatchUnit::Utterances => order.chunks(config.batch_size).map(<[usize]>::to_vec).collect(),
        BatchUnit::Frames => {
            let mut batches = Vec::new();
            let mut current = Vec::new();
            let mut frames = 0;
            for &i in order {
                current.push(i);
                frames += examples[i].features.n_frames;
                if frames >= config.batch_size {
                    batches.push(std::mem::take(&mut current));
                    frames = 0;
                }
            }
            if !current.is_empty() {
                batches.push(current);
            }
            batches
        }
    }
}

/// Mini-batch training of the probe and its layer weights.
///
/// With a dev set and PR mode, the returned probe is the one from the epoch
/// with the lowest dev loss (earliest on ties); otherwise it is the probe
/// after `max_epochs`. `on_epoch` sees the probe after every epoch.
pub fn train(
    mut probe: LinearProbe,
    examples: &[TrainExample<'_>],
    dev: Option<&[TrainExample<'_>]>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &LinearProbe) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if let Some(ex) = examples.iter().find(|ex| ex.features.dim != probe.dim() || ex.features.n_layers != probe.layers.len()) {
        return Err(Error::DimensionMismatch(format!(
            "utterance {} has {} layers of dim {}, probe expects {} of dim {}",
            ex.features.utt_id,
            ex.features.n_layers,
            ex.features.dim,
            probe.layers.len(),
            probe.dim()
        )));
    }
    let opt = config.optimizer_config();
    let mut w_state = AdamState::new(probe.weights.len());
    let mut b_state = AdamState::new(probe.bias.len());
    let mut l_state = AdamState::new(probe.layers.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, LinearProbe)> = None;
    let mut total_selected = 0usize;

    for epoch in 0..config.max_epochs {
        let lr = config.rate_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for batch in make_batches(&order, examples, config) {
            let parts: Vec<(f64, usize, Option<ProbeGrads>)> = batch
                .par_iter()
                .map(|&i| example_loss(&probe, &examples[i], config.mode, true))
                .collect::<Result<_>>()?;
            let mut grads = ProbeGrads::zeros_like(&probe);
            let mut count = 0;
            for (loss, n, g) in &parts {
                epoch_loss += loss;
                count += n;
                if let Some(g) = g {
                    grads.accumulate(g);
                }
            }
            if count == 0 {
                continue;
            }
            epoch_count += count;
            grads.scale(1.0 / count as f64);
            w_state.step(
                probe.weights.as_slice_mut().expect("standard layout"),
                grads.weights.as_slice().expect("standard layout"),
                lr,
                &opt,
            );
            b_state.step(
                probe.bias.as_slice_mut().expect("contiguous"),
                grads.bias.as_slice().expect("contiguous"),
                lr,
                &opt,
            );
            l_state.step(&mut probe.layers.logits, &grads.layer_logits, lr, &opt);
        }
        total_selected += epoch_count;
        if epoch_count == 0 {
            return Err(Error::NoSelectedFrames);
        }
        let train_loss = epoch_loss / epoch_count as f64;
        if !train_loss.is_finite() || !probe.is_finite() {
            return Err(Error::Diverged("training loss"));
        }
        let dev_loss = dev.map(|d| mean_loss(&probe, d, config.mode)).transpose()?;
        trace.push(EpochRecord {
            epoch: epoch + 1,
            learning_rate: lr,
            train_loss,
            dev_loss,
        });
        if let (Approach::Pr, Some(dl)) = (config.mode, dev_loss) {
            if best.as_ref().is_none_or(|(b, _, _)| dl < *b) {
                best = Some((dl, epoch + 1, probe.clone()));
            }
        }
        on_epoch(epoch + 1, &probe)?;
    }
    if config.max_epochs > 0 && total_selected == 0 {
        return Err(Error::NoSelectedFrames);
    }
    Ok(match best {
        Some((_, best_epoch, best_probe)) => TrainOutcome {
            probe: best_probe,
            trace,
            best_epoch,
        },
        None => TrainOutcome {
            probe,
            trace,
            best_epoch: config.max_epochs,
        },
    })
}

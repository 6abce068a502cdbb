use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::downstream::{train, Approach, LinearProbe, PhoneScore, TrainConfig, TrainExample};
use crate::error::{Error, Result};
use crate::featureio::Utterance;
use crate::metrics::{macro_average, min_cost, ScoredSet, ThresholdSource, ThresholdTable};
use crate::phoneset::PhoneInventory;
use crate::protocol::folds::FoldPlan;
use crate::protocol::vault::score_utterances;

/// Per-epoch pooled scores of a cross-validation run.
#[derive(Debug, Clone)]
pub struct CrossvalOutcome {
    /// `pooled[e]` holds every dev item scored by the fold models after
    /// `e + 1` epochs, in fold order.
    pub pooled: Vec<Vec<PhoneScore>>,
    /// Macro MinCost of `pooled[e]`.
    pub epoch_cost: Vec<f64>,
    /// Number of epochs with the lowest pooled cost (earliest on ties).
    pub best_epoch: usize,
}

impl CrossvalOutcome {
    pub fn best_scores(&self) -> &[PhoneScore] {
        &self.pooled[self.best_epoch - 1]
    }

    pub fn summary(&self) -> CrossvalSummary {
        CrossvalSummary {
            best_epoch: self.best_epoch,
            epoch_cost: self.epoch_cost.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalSummary {
    pub best_epoch: usize,
    pub epoch_cost: Vec<f64>,
}

/// Fresh zero probe sized for the data.
pub fn new_probe(utterances: &[&Utterance], inventory: &PhoneInventory, config: &TrainConfig) -> Result<LinearProbe> {
    let first = utterances
        .first()
        .ok_or_else(|| Error::Config("no utterances to train on".into()))?;
    Ok(LinearProbe::new(
        inventory.clone(),
        first.features.dim,
        first.features.n_layers,
        config.layer_weighting,
    ))
}

pub(crate) fn examples<'a>(utts: &[&'a Utterance], inventory: &PhoneInventory) -> Result<Vec<TrainExample<'a>>> {
    utts.iter().map(|u| TrainExample::from_utterance(u, inventory)).collect()
}

/// Macro MinCost over phones whose minority class reaches `min_minority`,
/// falling back to every phone with both classes when none does.
pub fn pooled_cost(scores: &[PhoneScore], min_minority: usize) -> Result<f64> {
    let set = ScoredSet::from_phone_scores(scores)?;
    let mut values = Vec::new();
    let mut flags = Vec::new();
    for (phone, (pos, neg)) in set.by_phone() {
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        values.push(min_cost(&set, phone)?.1);
        flags.push(pos.len().min(neg.len()) >= min_minority);
    }
    if !flags.iter().any(|&f| f) {
        flags.iter_mut().for_each(|f| *f = true);
    }
    macro_average(&values, &flags)
}

/// K-fold cross-validation on labeled development utterances.
///
/// Fold `i` trains on every other fold and scores fold `i` after each
/// epoch. Fold models are independent and run in parallel; results are
/// merged in fold order.
pub fn crossval_scores(
    dev: &[Utterance],
    folds: &FoldPlan,
    inventory: &PhoneInventory,
    config: &TrainConfig,
    min_minority: usize,
) -> Result<CrossvalOutcome> {
    if config.mode != Approach::Md {
        return Err(Error::Config("cross-validation runs in MD mode".into()));
    }
    if config.max_epochs == 0 {
        return Err(Error::Config("cross-validation needs max_epochs >= 1".into()));
    }
    for u in dev {
        if folds.fold(&u.speaker_id).is_none() {
            return Err(Error::Config(format!("speaker {} has no fold", u.speaker_id)));
        }
    }
    let per_fold: Vec<Vec<Vec<PhoneScore>>> = (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            let (held, rest): (Vec<&Utterance>, Vec<&Utterance>) =
                dev.iter().partition(|u| folds.fold(&u.speaker_id) == Some(fold));
            let train_ex = examples(&rest, inventory)?;
            let probe = new_probe(&rest, inventory, config)?;
            let mut fold_config = config.clone();
            fold_config.seed = config.seed.wrapping_add(fold as u64 + 1);
            let mut epochs = Vec::with_capacity(config.max_epochs);
            train(probe, &train_ex, None, &fold_config, |_, p| {
                epochs.push(score_utterances(p, &held)?);
                Ok(())
            })?;
            Ok(epochs)
        })
        .collect::<Result<_>>()?;

    let mut pooled = Vec::with_capacity(config.max_epochs);
    let mut epoch_cost = Vec::with_capacity(config.max_epochs);
    for e in 0..config.max_epochs {
        let scores: Vec<PhoneScore> = per_fold.iter().flat_map(|f| f[e].iter().cloned()).collect();
        epoch_cost.push(pooled_cost(&scores, min_minority)?);
        pooled.push(scores);
    }
    let mut best_epoch = 1;
    for (e, &c) in epoch_cost.iter().enumerate() {
        if c < epoch_cost[best_epoch - 1] {
            best_epoch = e + 1;
        }
    }
    Ok(CrossvalOutcome {
        pooled,
        epoch_cost,
        best_epoch,
    })
}

/// Per-phone MinCost thresholds on development scores, for phones whose
/// minority class reaches `min_minority`.
pub fn select_thresholds(dev: &ScoredSet, min_minority: usize, source: ThresholdSource) -> Result<ThresholdTable> {
    let mut thresholds = BTreeMap::new();
    for (phone, (pos, neg)) in dev.by_phone() {
        if pos.is_empty() || neg.is_empty() || pos.len().min(neg.len()) < min_minority {
            continue;
        }
        thresholds.insert(phone, min_cost(dev, phone)?.0);
    }
    Ok(ThresholdTable { source, thresholds })
}

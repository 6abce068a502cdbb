//! Detection metrics for per-phone scores.
//!
//! Orientation: a higher score means "more likely pronounced correctly".
//! At threshold `t` a phone is accepted when `score >= t`. FNR is the share
//! of correct phones rejected (an unnecessary correction), FPR the share of
//! mispronounced phones accepted. The application cost is `FPR + 2 FNR`.

mod bootstrap;
mod dump;
mod report;
mod roc;

pub use bootstrap::{bootstrap_ci, percentile, BootstrapCi};
pub use dump::{format_score_dump, read_score_dump};
pub use report::{
    evaluate, macro_average, render_table, EvalConfig, EvalReport, MacroMetric, PhoneMetrics,
    ThresholdSource, ThresholdTable, DEFAULT_MIN_MINORITY,
};
pub use roc::{act_cost, cost, min_cost, one_minus_auc, roc_points, OperatingPoint};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotate::PronLabel;
use crate::downstream::PhoneScore;
use crate::error::{Error, Result};
use crate::phoneset::Phone;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub score: f64,
    /// Positive or Negative; Ignored items never enter a scored set.
    pub label: PronLabel,
    pub speaker_id: String,
    pub phone: Phone,
}

/// Binary-labeled phone scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredSet {
    items: Vec<ScoredItem>,
}

impl ScoredSet {
    pub fn new(items: Vec<ScoredItem>) -> Result<Self> {
        for it in &items {
            if !it.score.is_finite() {
                return Err(Error::NonFiniteValue { index: 0 });
            }
            if it.label == PronLabel::Ignored {
                return Err(Error::Config("ignored items cannot be scored".into()));
            }
        }
        Ok(Self { items })
    }

    /// Keeps the scored (non-Ignored) entries.
    pub fn from_phone_scores(scores: &[PhoneScore]) -> Result<Self> {
        Self::new(
            scores
                .iter()
                .filter(|s| s.label.is_scored())
                .map(|s| ScoredItem {
                    score: s.score,
                    label: s.label,
                    speaker_id: s.speaker_id.clone(),
                    phone: s.instance.phone,
                })
                .collect(),
        )
    }

    pub fn items(&self) -> &[ScoredItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn phones(&self) -> Vec<Phone> {
        let mut phones: Vec<Phone> = self.items.iter().map(|i| i.phone).collect();
        phones.sort();
        phones.dedup();
        phones
    }

    /// Positive and negative scores of one phone.
    pub fn class_scores(&self, phone: Phone) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for it in self.items.iter().filter(|i| i.phone == phone) {
            match it.label {
                PronLabel::Positive => pos.push(it.score),
                _ => neg.push(it.score),
            }
        }
        (pos, neg)
    }

    pub fn by_phone(&self) -> BTreeMap<Phone, (Vec<f64>, Vec<f64>)> {
        let mut out: BTreeMap<Phone, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for it in &self.items {
            let e = out.entry(it.phone).or_default();
            match it.label {
                PronLabel::Positive => e.0.push(it.score),
                _ => e.1.push(it.score),
            }
        }
        out
    }
}

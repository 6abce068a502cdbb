//! Phased access to evaluation labels.
//!
//! Test utterances are split into label-free inputs and a vault. Scores are
//! computed from the inputs alone; the vault hands labels back only in
//! exchange for a complete set of scores.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::annotate::{PronLabel, TargetPhoneInstance};
use crate::downstream::{phone_score, LinearProbe, PhoneScore};
use crate::error::{Error, Result};
use crate::featureio::{Utterance, UtteranceFeatures};

#[derive(Debug, Clone)]
pub struct SealedUtterance {
    pub utt_id: String,
    pub speaker_id: String,
    pub features: UtteranceFeatures,
    pub targets: Vec<TargetPhoneInstance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledScore {
    pub instance: TargetPhoneInstance,
    pub speaker_id: String,
    pub score: f64,
}

#[derive(Debug)]
pub struct LabelVault {
    labels: BTreeMap<String, Vec<PronLabel>>,
}

impl LabelVault {
    pub fn seal(utterances: Vec<Utterance>) -> (Vec<SealedUtterance>, LabelVault) {
        let mut labels = BTreeMap::new();
        let sealed = utterances
            .into_iter()
            .map(|u| {
                labels.insert(u.utt_id.clone(), u.labels);
                SealedUtterance {
                    utt_id: u.utt_id,
                    speaker_id: u.speaker_id,
                    features: u.features,
                    targets: u.targets,
                }
            })
            .collect();
        (sealed, LabelVault { labels })
    }

    /// Attaches labels to scores. Every sealed target must be scored exactly
    /// once, in utterance order.
    pub fn reveal(self, scores: Vec<UnlabeledScore>) -> Result<Vec<PhoneScore>> {
        let mut by_utt: BTreeMap<&str, Vec<&UnlabeledScore>> = BTreeMap::new();
        for s in &scores {
            by_utt.entry(s.instance.utt_id.as_str()).or_default().push(s);
        }
        for (utt, labels) in &self.labels {
            let n = by_utt.get(utt.as_str()).map_or(0, Vec::len);
            if n != labels.len() {
                return Err(Error::MissingUtterance(format!("{utt}: {n} scores for {} targets", labels.len())));
            }
        }
        if let Some(extra) = by_utt.keys().find(|u| !self.labels.contains_key(**u)) {
            return Err(Error::MissingUtterance(format!("{extra} was never sealed")));
        }
        let mut cursor: BTreeMap<String, usize> = BTreeMap::new();
        Ok(scores
            .into_iter()
            .map(|s| {
                let i = cursor.entry(s.instance.utt_id.clone()).or_default();
                let label = self.labels[&s.instance.utt_id][*i];
                *i += 1;
                PhoneScore {
                    instance: s.instance,
                    label,
                    score: s.score,
                    speaker_id: s.speaker_id,
                }
            })
            .collect())
    }
}

fn score_one(probe: &LinearProbe, features: &UtteranceFeatures, targets: &[TargetPhoneInstance]) -> Result<Vec<f64>> {
    let (_, logits) = probe.utterance_logits(features)?;
    targets.iter().map(|t| phone_score(&logits, t, &probe.inventory)).collect()
}

pub fn score_sealed(probe: &LinearProbe, utterances: &[SealedUtterance]) -> Result<Vec<UnlabeledScore>> {
    let per_utt: Vec<Vec<UnlabeledScore>> = utterances
        .par_iter()
        .map(|u| {
            let scores = score_one(probe, &u.features, &u.targets)?;
            Ok(u.targets
                .iter()
                .zip(scores)
                .map(|(t, score)| UnlabeledScore {
                    instance: t.clone(),
                    speaker_id: u.speaker_id.clone(),
                    score,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_utt.into_iter().flatten().collect())
}

/// Scores utterances whose labels may be used freely (development data).
pub fn score_utterances(probe: &LinearProbe, utterances: &[&Utterance]) -> Result<Vec<PhoneScore>> {
    let per_utt: Vec<Vec<PhoneScore>> = utterances
        .par_iter()
        .map(|u| {
            let scores = score_one(probe, &u.features, &u.targets)?;
            Ok(u.targets
                .iter()
                .zip(&u.labels)
                .zip(scores)
                .map(|((t, &label), score)| PhoneScore {
                    instance: t.clone(),
                    label,
                    score,
                    speaker_id: u.speaker_id.clone(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_utt.into_iter().flatten().collect())
}

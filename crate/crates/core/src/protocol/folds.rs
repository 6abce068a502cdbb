use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    #[default]
    BySpeaker,
    ByL1,
}

/// Assignment of development speakers to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub grouping: Grouping,
    pub fold_of: BTreeMap<String, usize>,
}

/// Shuffles the groups (speakers or L1s) with `seed` and deals them to
/// folds round-robin. `speakers` maps speaker id to L1.
pub fn make_folds(speakers: &BTreeMap<String, String>, k: usize, grouping: Grouping, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {k}")));
    }
    let mut groups: Vec<&str> = match grouping {
        Grouping::BySpeaker => speakers.keys().map(String::as_str).collect(),
        Grouping::ByL1 => speakers.values().map(String::as_str).collect(),
    };
    groups.sort_unstable();
    groups.dedup();
    if k > groups.len() {
        return Err(Error::TooManyFolds { k, groups: groups.len() });
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of_group: BTreeMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (*g, i % k)).collect();
    let fold_of = speakers
        .iter()
        .map(|(spk, l1)| {
            let key = match grouping {
                Grouping::BySpeaker => spk.as_str(),
                Grouping::ByL1 => l1.as_str(),
            };
            (spk.clone(), fold_of_group[key])
        })
        .collect();
    Ok(FoldPlan { k, grouping, fold_of })
}

impl FoldPlan {
    pub fn fold(&self, speaker: &str) -> Option<usize> {
        self.fold_of.get(speaker).copied()
    }

    pub fn speakers_in(&self, fold: usize) -> Vec<&str> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// `speaker_id<TAB>fold` lines, sorted by speaker.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, f) in &self.fold_of {
            let _ = writeln!(out, "{s}\t{f}");
        }
        out
    }

    /// Reads an exported (or externally published) fold list. Fold indices
    /// must be contiguous from 0.
    pub fn parse(text: &str, grouping: Grouping, origin: &Path) -> Result<Self> {
        let mut fold_of = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (spk, fold) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, k + 1, "expected speaker_id<TAB>fold"))?;
            let fold: usize = fold
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, k + 1, format!("bad fold index {fold:?}")))?;
            if fold_of.insert(spk.to_string(), fold).is_some() {
                return Err(Error::parse(origin, k + 1, format!("speaker {spk} listed twice")));
            }
        }
        let k = fold_of.values().max().map_or(0, |m| m + 1);
        if k < 2 || (0..k).any(|f| !fold_of.values().any(|&g| g == f)) {
            return Err(Error::Config(format!("{}: folds must be numbered 0..k with k >= 2", origin.display())));
        }
        Ok(Self { k, grouping, fold_of })
    }
}

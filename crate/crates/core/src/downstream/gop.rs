//! Goodness of Pronunciation from senone posteriors.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::annotate::TargetPhoneInstance;
use crate::error::{Error, Result};
use crate::phoneset::{normalize_phone, Phone, SchemeMapping};

/// Log posteriors are floored here to keep empty phones finite.
pub const LOG_FLOOR: f64 = -23.025850929940457; // ln(1e-10)

const ROW_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GopVariant {
    /// Mean over frames of log(sum of the phone's senone posteriors).
    #[default]
    MeanLogPosterior,
    /// Mean over frames of log p(target) - log max_q p(q).
    LogPosteriorRatio,
}

/// Senone index to phone, total over `0..n_senones`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenoneMap {
    phone_of: Vec<Phone>,
}

impl SenoneMap {
    pub fn new(phone_of: Vec<Phone>) -> Self {
        Self { phone_of }
    }

    pub fn len(&self) -> usize {
        self.phone_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phone_of.is_empty()
    }

    pub fn phone(&self, senone: usize) -> Phone {
        self.phone_of[senone]
    }
}

/// Reads `senone_index<TAB>phone_symbol` lines. Every index in
/// `0..max+1` must appear exactly once.
pub fn read_senone_map(path: &Path, mapping: &SchemeMapping) -> Result<SenoneMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, sym) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, k + 1, "expected senone_index<TAB>phone"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, k + 1, format!("bad senone index {idx:?}")))?;
        let phone = normalize_phone(sym, mapping).map_err(|e| Error::parse(path, k + 1, e.to_string()))?;
        pairs.push((idx, phone, k + 1));
    }
    let n = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let mut phone_of: Vec<Option<Phone>> = vec![None; n];
    for (idx, phone, line) in pairs {
        if phone_of[idx].replace(phone).is_some() {
            return Err(Error::parse(path, line, format!("senone {idx} listed twice")));
        }
    }
    let phone_of = phone_of
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::parse(path, 0, format!("senone {i} has no phone"))))
        .collect::<Result<_>>()?;
    Ok(SenoneMap { phone_of })
}

/// GOP score of one target instance from a `T x S` posterior matrix.
pub fn gop_score(
    posteriors: &Array2<f64>,
    map: &SenoneMap,
    instance: &TargetPhoneInstance,
    variant: GopVariant,
) -> Result<f64> {
    let (start, end) = (instance.start_frame, instance.end_frame);
    if start >= end || end > posteriors.nrows() {
        return Err(Error::SpanOutOfRange {
            start,
            end,
            n_frames: posteriors.nrows(),
        });
    }
    if posteriors.ncols() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} posterior columns for {} mapped senones",
            posteriors.ncols(),
            map.len()
        )));
    }
    let mut total = 0.0;
    for t in start..end {
        let row = posteriors.row(t);
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::RowNotNormalized { row: t, sum });
        }
        let mut per_phone = [0.0f64; crate::phoneset::INVENTORY_SIZE];
        for (s, &p) in row.iter().enumerate() {
            per_phone[map.phone(s).canonical_index()] += p;
        }
        let log = |p: f64| if p > 0.0 { p.ln().max(LOG_FLOOR) } else { LOG_FLOOR };
        let target = log(per_phone[instance.phone.canonical_index()]);
        total += match variant {
            GopVariant::MeanLogPosterior => target,
            GopVariant::LogPosteriorRatio => {
                let best = per_phone.iter().copied().fold(0.0, f64::max);
                target - log(best)
            }
        };
    }
    Ok(total / (end - start) as f64)
}

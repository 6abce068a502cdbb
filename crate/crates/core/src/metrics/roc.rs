use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ScoredSet;
use crate::phoneset::Phone;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    #[serde(with = "crate::util::serde_f64")]
    pub threshold: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// `fpr + 2 fnr`.
pub fn cost(fpr: f64, fnr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fpr) {
        return Err(Error::OutOfRange { name: "fpr", value: fpr });
    }
    if !(0.0..=1.0).contains(&fnr) {
        return Err(Error::OutOfRange { name: "fnr", value: fnr });
    }
    Ok(fpr + 2.0 * fnr)
}

fn classes(set: &ScoredSet, phone: Phone) -> Result<(Vec<f64>, Vec<f64>)> {
    let (pos, neg) = set.class_scores(phone);
    check_classes(phone, &pos, &neg)?;
    Ok((pos, neg))
}

pub(crate) fn check_classes(phone: Phone, pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateClass {
            phone: phone.to_string(),
            n_pos: pos.len(),
            n_neg: neg.len(),
        });
    }
    Ok(())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn rates(pos_rejected: usize, neg_rejected: usize, n_pos: usize, n_neg: usize) -> (f64, f64) {
    let fpr = (n_neg - neg_rejected) as f64 / n_neg as f64;
    let fnr = pos_rejected as f64 / n_pos as f64;
    (fpr, fnr)
}

/// Operating points at -inf, at the midpoint of every pair of consecutive
/// distinct scores, and at +inf, in increasing threshold order.
pub(crate) fn sweep(pos: &[f64], neg: &[f64]) -> Vec<OperatingPoint> {
    let (pos, neg) = (sorted(pos), sorted(neg));
    let (n_pos, n_neg) = (pos.len(), neg.len());
    let mut points = Vec::with_capacity(n_pos + n_neg + 1);
    let (fpr, fnr) = rates(0, 0, n_pos, n_neg);
    points.push(OperatingPoint {
        threshold: f64::NEG_INFINITY,
        fpr,
        fnr,
    });
    let (mut i, mut j) = (0, 0);
    while i < n_pos || j < n_neg {
        let v = match (pos.get(i), neg.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < n_pos && pos[i] == v {
            i += 1;
        }
        while j < n_neg && neg[j] == v {
            j += 1;
        }
        let next = match (pos.get(i), neg.get(j)) {
            (Some(&a), Some(&b)) => Some(a.min(b)),
            (Some(&a), None) => Some(a),
            (None, Some(&b)) => Some(b),
            (None, None) => None,
        };
        let threshold = match next {
            Some(w) => {
                let mid = v + (w - v) / 2.0;
                if mid > v { mid } else { w }
            }
            None => f64::INFINITY,
        };
        let (fpr, fnr) = rates(i, j, n_pos, n_neg);
        points.push(OperatingPoint { threshold, fpr, fnr });
    }
    points
}

pub fn roc_points(set: &ScoredSet, phone: Phone) -> Result<Vec<OperatingPoint>> {
    let (pos, neg) = classes(set, phone)?;
    Ok(sweep(&pos, &neg))
}

/// `P(neg > pos) + P(tie) / 2` from exact pair counts.
pub(crate) fn rank_one_minus_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let pos = sorted(pos);
    // twice the statistic, kept integral: 2 * #(neg > pos) + #(ties)
    let mut doubled: u128 = 0;
    for &n in neg {
        let below = pos.partition_point(|&p| p < n);
        let not_above = pos.partition_point(|&p| p <= n);
        doubled += 2 * below as u128 + (not_above - below) as u128;
    }
    doubled as f64 / (2 * pos.len() as u128 * neg.len() as u128) as f64
}

pub fn one_minus_auc(set: &ScoredSet, phone: Phone) -> Result<f64> {
    let (pos, neg) = classes(set, phone)?;
    Ok(rank_one_minus_auc(&pos, &neg))
}

/// Lowest cost over the sweep; ties go to the lowest threshold.
pub(crate) fn sweep_min_cost(pos: &[f64], neg: &[f64]) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for p in sweep(pos, neg) {
        let c = p.fpr + 2.0 * p.fnr;
        if c < best.1 {
            best = (p.threshold, c);
        }
    }
    best
}

/// Returns `(threshold, cost)`.
pub fn min_cost(set: &ScoredSet, phone: Phone) -> Result<(f64, f64)> {
    let (pos, neg) = classes(set, phone)?;
    Ok(sweep_min_cost(&pos, &neg))
}

pub(crate) fn cost_at(pos: &[f64], neg: &[f64], threshold: f64) -> f64 {
    let pos_rejected = pos.iter().filter(|&&s| s < threshold).count();
    let neg_rejected = neg.iter().filter(|&&s| s < threshold).count();
    let (fpr, fnr) = rates(pos_rejected, neg_rejected, pos.len(), neg.len());
    fpr + 2.0 * fnr
}

/// Cost on `test` when phone `phone` is thresholded at `threshold`.
pub fn act_cost(test: &ScoredSet, phone: Phone, threshold: f64) -> Result<f64> {
    if threshold.is_nan() {
        return Err(Error::Config("threshold is NaN".into()));
    }
    let (pos, neg) = classes(test, phone)?;
    Ok(cost_at(&pos, &neg, threshold))
}

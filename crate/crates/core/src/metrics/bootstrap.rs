use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ScoredItem, ScoredSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
    pub replicates: usize,
    /// Replicates where the metric was undefined (e.g. every included phone
    /// lost a class) and that were left out of the percentiles.
    pub skipped: usize,
}

impl BootstrapCi {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Speaker-level percentile bootstrap.
///
/// Each replicate draws as many speakers as the set holds, with replacement,
/// and every item of a drawn speaker enters once per draw. Replicate `r`
/// uses its own ChaCha stream of `seed`, so results do not depend on the
/// thread count. `level` is the two-sided coverage, e.g. 0.95.
pub fn bootstrap_ci<F>(set: &ScoredSet, metric: F, replicates: usize, seed: u64, level: f64) -> Result<BootstrapCi>
where
    F: Fn(&ScoredSet) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Config(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let point = metric(set)?;
    let mut by_speaker: BTreeMap<&str, Vec<&ScoredItem>> = BTreeMap::new();
    for it in set.items() {
        by_speaker.entry(it.speaker_id.as_str()).or_default().push(it);
    }
    let groups: Vec<Vec<&ScoredItem>> = by_speaker.into_values().collect();

    let values: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut items = Vec::with_capacity(set.len());
            for _ in 0..groups.len() {
                let g = &groups[rng.random_range(0..groups.len())];
                items.extend(g.iter().map(|&it| it.clone()));
            }
            let rep = ScoredSet { items };
            metric(&rep).ok()
        })
        .collect();
    let mut kept: Vec<f64> = values.into_iter().flatten().collect();
    let skipped = replicates - kept.len();
    if kept.is_empty() {
        return Err(Error::NoIncludedPhones);
    }
    kept.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        lower: percentile(&kept, tail),
        upper: percentile(&kept, 1.0 - tail),
        point,
        replicates,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::PronLabel;
    use crate::phoneset::Phone;

    fn item(score: f64, positive: bool, speaker: &str) -> ScoredItem {
        ScoredItem {
            score,
            label: if positive { PronLabel::Positive } else { PronLabel::Negative },
            speaker_id: speaker.into(),
            phone: Phone::from_symbol("AE").unwrap(),
        }
    }

    fn auc(s: &ScoredSet) -> Result<f64> {
        crate::metrics::one_minus_auc(s, Phone::from_symbol("AE").unwrap())
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.125), 1.5);
    }

    #[test]
    fn single_speaker_has_zero_width() {
        let set = ScoredSet::new(vec![item(0.9, true, "a"), item(0.2, false, "a"), item(0.5, false, "a")]).unwrap();
        let ci = bootstrap_ci(&set, auc, 200, 3, 0.95).unwrap();
        assert_eq!(ci.width(), 0.0);
        assert_eq!(ci.point, ci.lower);
    }

    #[test]
    fn identical_speakers_have_zero_width() {
        let mut items = Vec::new();
        for s in ["a", "b", "c", "d"] {
            items.extend([item(0.9, true, s), item(0.3, true, s), item(0.4, false, s)]);
        }
        let ci = bootstrap_ci(&ScoredSet::new(items).unwrap(), auc, 200, 3, 0.95).unwrap();
        assert_eq!(ci.width(), 0.0);
    }

    #[test]
    fn degenerate_replicates_are_counted() {
        // each speaker holds only one class, so some draws lose a class
        let set = ScoredSet::new(vec![item(0.9, true, "a"), item(0.1, false, "b")]).unwrap();
        let ci = bootstrap_ci(&set, auc, 400, 1, 0.95).unwrap();
        assert!(ci.skipped > 100 && ci.skipped < 300, "skipped {}", ci.skipped);
        assert_eq!(ci.width(), 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let items: Vec<ScoredItem> = (0..40)
            .map(|i| item((i as f64 * 0.37).sin(), i % 3 != 0, &format!("s{}", i % 8)))
            .collect();
        let set = ScoredSet::new(items).unwrap();
        let a = bootstrap_ci(&set, auc, 300, 11, 0.95).unwrap();
        let b = bootstrap_ci(&set, auc, 300, 11, 0.95).unwrap();
        assert_eq!(a, b);
        assert!(a.lower <= a.point && a.point <= a.upper);
    }
}

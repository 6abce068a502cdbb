use mispro::annotate::PronLabel;
use mispro::metrics::{
    act_cost, bootstrap_ci, cost, min_cost, one_minus_auc, roc_points, ScoredItem, ScoredSet,
};
use mispro::phoneset::Phone;
use mispro::synth::{oracle_pairwise_auc, oracle_sweep_min_cost};
use proptest::prelude::*;

fn ae() -> Phone {
    Phone::from_symbol("AE").unwrap()
}

/// Scores on a coarse grid so ties are common; both classes non-empty.
fn labeled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    proptest::collection::vec((-40i32..40, any::<bool>()), 2..120)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| v.into_iter().map(|(k, l)| (k as f64 / 8.0, l)).unzip())
}

fn set_of(scores: &[f64], labels: &[bool]) -> ScoredSet {
    let items = scores
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (&score, &positive))| ScoredItem {
            score,
            label: if positive { PronLabel::Positive } else { PronLabel::Negative },
            speaker_id: format!("spk{}", i % 7),
            phone: ae(),
        })
        .collect();
    ScoredSet::new(items).unwrap()
}

fn accepted(scores: &[f64], thr: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= thr).collect()
}

proptest! {
    #[test]
    fn auc_matches_pairwise_count((s, l) in labeled_scores()) {
        let got = one_minus_auc(&set_of(&s, &l), ae()).unwrap();
        prop_assert!((got - (1.0 - oracle_pairwise_auc(&s, &l))).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_trapezoid_area((s, l) in labeled_scores()) {
        let set = set_of(&s, &l);
        let pts = roc_points(&set, ae()).unwrap();
        // points run from (fpr 1, tpr 1) down to (0, 0)
        let area: f64 = pts
            .windows(2)
            .map(|w| (w[0].fpr - w[1].fpr) * ((1.0 - w[0].fnr) + (1.0 - w[1].fnr)) / 2.0)
            .sum();
        prop_assert!((one_minus_auc(&set, ae()).unwrap() - (1.0 - area)).abs() < 1e-12);
    }

    #[test]
    fn min_cost_matches_sweep_oracle((s, l) in labeled_scores()) {
        let (thr, c) = min_cost(&set_of(&s, &l), ae()).unwrap();
        let (othr, oc) = oracle_sweep_min_cost(&s, &l);
        prop_assert_eq!(c, oc);
        prop_assert_eq!(accepted(&s, thr), accepted(&s, othr));
    }

    #[test]
    fn min_cost_bounds_every_operating_point((s, l) in labeled_scores()) {
        let set = set_of(&s, &l);
        let (_, m) = min_cost(&set, ae()).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        for p in roc_points(&set, ae()).unwrap() {
            prop_assert!(m <= cost(p.fpr, p.fnr).unwrap());
        }
    }

    #[test]
    fn roc_points_match_direct_counts((s, l) in labeled_scores()) {
        let n_pos = l.iter().filter(|&&x| x).count() as f64;
        let n_neg = l.len() as f64 - n_pos;
        let pts = roc_points(&set_of(&s, &l), ae()).unwrap();
        let distinct = {
            let mut d = s.clone();
            d.sort_by(f64::total_cmp);
            d.dedup();
            d.len()
        };
        prop_assert_eq!(pts.len(), distinct + 1);
        prop_assert!(pts.windows(2).all(|w| w[0].threshold < w[1].threshold));
        for p in pts {
            let fa = s.iter().zip(&l).filter(|(&v, &pos)| !pos && v >= p.threshold).count() as f64;
            let miss = s.iter().zip(&l).filter(|(&v, &pos)| pos && v < p.threshold).count() as f64;
            prop_assert_eq!(p.fpr, fa / n_neg);
            prop_assert_eq!(p.fnr, miss / n_pos);
        }
    }

    #[test]
    fn metrics_invariant_under_monotone_maps((s, l) in labeled_scores()) {
        let base = set_of(&s, &l);
        let (bthr, bcost) = min_cost(&base, ae()).unwrap();
        for f in [|x: f64| 2.0 * x - 3.0, |x: f64| x * x * x] {
            let t: Vec<f64> = s.iter().map(|&x| f(x)).collect();
            let mapped = set_of(&t, &l);
            prop_assert_eq!(one_minus_auc(&mapped, ae()).unwrap(), one_minus_auc(&base, ae()).unwrap());
            let (thr, c) = min_cost(&mapped, ae()).unwrap();
            prop_assert_eq!(c, bcost);
            prop_assert_eq!(accepted(&t, thr), accepted(&s, bthr));
        }
    }

    #[test]
    fn act_cost_never_beats_min_cost(
        (s, l) in labeled_scores(),
        dev_thr in -6.0f64..6.0,
    ) {
        let test = set_of(&s, &l);
        let (_, m) = min_cost(&test, ae()).unwrap();
        let a = act_cost(&test, ae(), dev_thr).unwrap();
        prop_assert!(m <= a && a <= 3.0);
        prop_assert_eq!(act_cost(&test, ae(), f64::NEG_INFINITY).unwrap(), 1.0);
        prop_assert_eq!(act_cost(&test, ae(), f64::INFINITY).unwrap(), 2.0);
    }

    #[test]
    fn act_cost_from_dev_split((s, l) in labeled_scores(), cut in 0.2f64..0.8) {
        let k = ((s.len() as f64) * cut) as usize;
        let (dev_s, test_s) = s.split_at(k);
        let (dev_l, test_l) = l.split_at(k);
        let both = |l: &[bool]| l.iter().any(|&x| x) && l.iter().any(|&x| !x);
        prop_assume!(both(dev_l) && both(test_l));
        let (thr, _) = min_cost(&set_of(dev_s, dev_l), ae()).unwrap();
        let test = set_of(test_s, test_l);
        prop_assert!(min_cost(&test, ae()).unwrap().1 <= act_cost(&test, ae(), thr).unwrap());
    }

    #[test]
    fn bootstrap_ignores_item_order((s, l) in labeled_scores(), seed in any::<u64>()) {
        let metric = |x: &ScoredSet| one_minus_auc(x, ae());
        let a = bootstrap_ci(&set_of(&s, &l), metric, 50, seed, 0.9).unwrap();
        let mut items = set_of(&s, &l).items().to_vec();
        items.reverse();
        let b = bootstrap_ci(&ScoredSet::new(items).unwrap(), metric, 50, seed, 0.9).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn cost_anchors() {
    assert_eq!(cost(1.0, 0.0).unwrap(), 1.0);
    assert_eq!(cost(0.0, 1.0).unwrap(), 2.0);
    assert!(cost(1.5, 0.0).is_err());
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::bootstrap::{bootstrap_ci, BootstrapCi};
use crate::metrics::roc::{cost_at, rank_one_minus_auc, sweep_min_cost};
use crate::metrics::ScoredSet;
use crate::phoneset::Phone;
use crate::util::format_f64;

/// Phones whose rarer class has fewer instances than this stay out of
/// macro averages.
pub const DEFAULT_MIN_MINORITY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdSource {
    Dev,
    PooledCv,
}

impl std::fmt::Display for ThresholdSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdSource::Dev => "dev",
            ThresholdSource::PooledCv => "pooled-cv",
        })
    }
}

/// Per-phone decision thresholds chosen on development scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub source: ThresholdSource,
    #[serde(with = "threshold_map")]
    pub thresholds: BTreeMap<Phone, f64>,
}

mod threshold_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::phoneset::Phone;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::util::serde_f64")] f64);

    pub fn serialize<S: Serializer>(m: &BTreeMap<Phone, f64>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(p, &t)| (*p, Wrap(t))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Phone, f64>, D::Error> {
        Ok(BTreeMap::<Phone, Wrap>::deserialize(d)?
            .into_iter()
            .map(|(p, w)| (p, w.0))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneMetrics {
    pub phone: Phone,
    pub n_pos: usize,
    pub n_neg: usize,
    pub one_minus_auc: Option<f64>,
    pub min_cost: Option<f64>,
    #[serde(with = "crate::util::serde_opt_f64")]
    pub min_cost_threshold: Option<f64>,
    pub act_cost: Option<f64>,
    #[serde(with = "crate::util::serde_opt_f64")]
    pub act_threshold: Option<f64>,
    pub act_threshold_source: Option<ThresholdSource>,
    pub included_in_macro: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMetric {
    pub value: f64,
    pub n_phones: usize,
    pub ci: Option<BootstrapCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub min_minority: usize,
    pub per_phone: Vec<PhoneMetrics>,
    pub macro_one_minus_auc: MacroMetric,
    pub macro_min_cost: MacroMetric,
    /// Absent when no thresholds were supplied.
    pub macro_act_cost: Option<MacroMetric>,
    pub provenance: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed report: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub min_minority: usize,
    /// 0 disables confidence intervals.
    pub bootstrap_replicates: usize,
    pub confidence_level: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_minority: DEFAULT_MIN_MINORITY,
            bootstrap_replicates: 1000,
            confidence_level: 0.95,
            seed: 0,
        }
    }
}

/// Unweighted mean of the included values.
pub fn macro_average(values: &[f64], included: &[bool]) -> Result<f64> {
    assert_eq!(values.len(), included.len(), "one inclusion flag per value");
    let kept: Vec<f64> = values
        .iter()
        .zip(included)
        .filter(|(_, &inc)| inc)
        .map(|(&v, _)| v)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoIncludedPhones);
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

#[derive(Clone, Copy)]
enum MacroKind {
    OneMinusAuc,
    MinCost,
    ActCost,
}

/// Macro metric over a fixed phone list; phones lacking a class in `set`
/// are dropped from the mean.
fn macro_over(set: &ScoredSet, phones: &[Phone], kind: MacroKind, thresholds: &BTreeMap<Phone, f64>) -> Result<f64> {
    let by_phone = set.by_phone();
    let mut values = Vec::with_capacity(phones.len());
    for p in phones {
        let Some((pos, neg)) = by_phone.get(p) else { continue };
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        values.push(match kind {
            MacroKind::OneMinusAuc => rank_one_minus_auc(pos, neg),
            MacroKind::MinCost => sweep_min_cost(pos, neg).1,
            MacroKind::ActCost => cost_at(pos, neg, thresholds[p]),
        });
    }
    let flags = vec![true; values.len()];
    macro_average(&values, &flags)
}

/// Per-phone and macro metrics on test scores. With `thresholds`, ActCost is
/// computed for every phone that has a threshold.
pub fn evaluate(test: &ScoredSet, thresholds: Option<&ThresholdTable>, config: &EvalConfig) -> Result<EvalReport> {
    let mut per_phone = Vec::new();
    for (phone, (pos, neg)) in test.by_phone() {
        let both = !pos.is_empty() && !neg.is_empty();
        let act_threshold = thresholds.and_then(|t| t.thresholds.get(&phone).copied());
        let (min_thr, min_c) = if both {
            let (t, c) = sweep_min_cost(&pos, &neg);
            (Some(t), Some(c))
        } else {
            (None, None)
        };
        per_phone.push(PhoneMetrics {
            phone,
            n_pos: pos.len(),
            n_neg: neg.len(),
            one_minus_auc: both.then(|| rank_one_minus_auc(&pos, &neg)),
            min_cost: min_c,
            min_cost_threshold: min_thr,
            act_cost: act_threshold.filter(|_| both).map(|t| cost_at(&pos, &neg, t)),
            act_threshold,
            act_threshold_source: act_threshold.and(thresholds.map(|t| t.source)),
            included_in_macro: pos.len().min(neg.len()) >= config.min_minority,
        });
    }
    let included: Vec<Phone> = per_phone.iter().filter(|m| m.included_in_macro).map(|m| m.phone).collect();
    if included.is_empty() {
        return Err(Error::NoIncludedPhones);
    }
    for m in per_phone.iter().filter(|m| m.included_in_macro && m.act_cost.is_none() && thresholds.is_some()) {
        log::warn!("phone {} passes the test filter but has no threshold; left out of macro ActCost", m.phone);
    }
    let with_threshold: Vec<Phone> = per_phone
        .iter()
        .filter(|m| m.included_in_macro && m.act_cost.is_some())
        .map(|m| m.phone)
        .collect();
    let table = thresholds.map(|t| t.thresholds.clone()).unwrap_or_default();

    let summarize = |phones: &[Phone], kind: MacroKind| -> Result<MacroMetric> {
        let metric = |s: &ScoredSet| macro_over(s, phones, kind, &table);
        let value = metric(test)?;
        let ci = if config.bootstrap_replicates > 0 {
            Some(bootstrap_ci(test, metric, config.bootstrap_replicates, config.seed, config.confidence_level)?)
        } else {
            None
        };
        Ok(MacroMetric {
            value,
            n_phones: phones.len(),
            ci,
        })
    };

    Ok(EvalReport {
        min_minority: config.min_minority,
        macro_one_minus_auc: summarize(&included, MacroKind::OneMinusAuc)?,
        macro_min_cost: summarize(&included, MacroKind::MinCost)?,
        macro_act_cost: if thresholds.is_some() && !with_threshold.is_empty() {
            Some(summarize(&with_threshold, MacroKind::ActCost)?)
        } else {
            None
        },
        per_phone,
        provenance: BTreeMap::new(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn macro_line(out: &mut String, name: &str, m: &MacroMetric) {
    let _ = write!(out, "{name:<14}{:.4}", m.value);
    if let Some(ci) = &m.ci {
        let _ = write!(out, "  [{:.4}, {:.4}]", ci.lower, ci.upper);
        if ci.skipped > 0 {
            let _ = write!(out, "  ({} of {} replicates skipped)", ci.skipped, ci.replicates);
        }
    }
    let _ = writeln!(out, "  over {} phones", m.n_phones);
}

/// Human-readable rendering of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    for (k, v) in &report.provenance {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(
        out,
        "{:<6}{:>7}{:>7}{:>9}{:>9}{:>9}{:>10}  macro",
        "phone", "n_pos", "n_neg", "1-AUC", "MinCost", "ActCost", "thr"
    );
    for m in &report.per_phone {
        let _ = writeln!(
            out,
            "{:<6}{:>7}{:>7}{:>9}{:>9}{:>9}{:>10}  {}",
            m.phone.symbol(),
            m.n_pos,
            m.n_neg,
            opt(m.one_minus_auc),
            opt(m.min_cost),
            opt(m.act_cost),
            m.act_threshold.map(|t| if t.is_finite() { format!("{t:.3}") } else { format_f64(t) }).unwrap_or_else(|| "-".into()),
            if m.included_in_macro { "yes" } else { "no" }
        );
    }
    let _ = writeln!(out, "\nmacro averages (phones with minority class >= {})", report.min_minority);
    macro_line(&mut out, "1-AUC", &report.macro_one_minus_auc);
    macro_line(&mut out, "MinCost", &report.macro_min_cost);
    if let Some(a) = &report.macro_act_cost {
        macro_line(&mut out, "ActCost", a);
    }
    out
}

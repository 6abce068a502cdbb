//! Target/annotation alignment, pronunciation labels and frame expansion.
//!
//! Target phones come from a forced aligner as frame spans. The manual
//! annotation lists what the speaker actually produced. The two sequences are
//! aligned with a phonetic-feature similarity (an ALINE-style scorer over
//! ARPAbet), then each target gets a label: matched phones are correct,
//! substituted or deleted phones are incorrect, and inserted phones are
//! dropped without touching their neighbours. Silence is never scored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phoneset::{normalize_phone, Phone, PhoneInventory, SchemeMapping, UnmappablePolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetPhoneInstance {
    pub utt_id: String,
    pub phone: Phone,
    /// First frame of the span.
    pub start_frame: usize,
    /// One past the last frame.
    pub end_frame: usize,
}

impl TargetPhoneInstance {
    pub fn duration(&self) -> usize {
        self.end_frame - self.start_frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PronLabel {
    Positive,
    Negative,
    Ignored,
}

impl PronLabel {
    pub fn is_scored(self) -> bool {
        self != PronLabel::Ignored
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTargetPhone {
    pub instance: TargetPhoneInstance,
    pub label: PronLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Match,
    Substitution,
    Deletion,
    Addition,
}

/// One column of a pairwise alignment. Indices point into the target and
/// annotation sequences respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentStep {
    Match { target: usize, annotation: usize },
    Substitution { target: usize, annotation: usize },
    Deletion { target: usize },
    Addition { annotation: usize },
}

impl AlignmentStep {
    pub fn kind(&self) -> StepKind {
        match self {
            AlignmentStep::Match { .. } => StepKind::Match,
            AlignmentStep::Substitution { .. } => StepKind::Substitution,
            AlignmentStep::Deletion { .. } => StepKind::Deletion,
            AlignmentStep::Addition { .. } => StepKind::Addition,
        }
    }

    pub fn target_index(&self) -> Option<usize> {
        match *self {
            AlignmentStep::Match { target, .. }
            | AlignmentStep::Substitution { target, .. }
            | AlignmentStep::Deletion { target } => Some(target),
            AlignmentStep::Addition { .. } => None,
        }
    }

    pub fn annotation_index(&self) -> Option<usize> {
        match *self {
            AlignmentStep::Match { annotation, .. }
            | AlignmentStep::Substitution { annotation, .. }
            | AlignmentStep::Addition { annotation } => Some(annotation),
            AlignmentStep::Deletion { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub steps: Vec<AlignmentStep>,
    /// Total similarity minus gap penalties.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Cost of a deletion or an addition on the [0, 1] similarity scale.
    pub gap_penalty: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self { gap_penalty: 0.5 }
    }
}

// Feature slots: place, manner, voicing, height, backness, rounding, offglide.
// 0 means "not applicable"; silence uses a value no other phone has.
const N_FEATURES: usize = 7;
const FEATURE_WEIGHTS: [f64; N_FEATURES] = [0.25, 0.25, 0.10, 0.15, 0.10, 0.05, 0.10];
const SILENCE_CODE: u8 = u8::MAX;

fn features(phone: Phone) -> [u8; N_FEATURES] {
    // place: 1 bilabial 2 labiodental 3 dental 4 alveolar 5 postalveolar
    //        6 palatal 7 velar 8 labiovelar 9 glottal
    // manner: 1 stop 2 affricate 3 fricative 4 nasal 5 lateral 6 approximant
    //         7 vowel 8 rhotic vowel
    // voicing: 1 voiceless 2 voiced
    // height: 1 high 2 near-high 3 mid 4 open-mid 5 near-low 6 low
    // backness: 1 front 2 central 3 back; rounding: 1 unrounded 2 rounded
    // offglide: 1 none 2 front 3 back
    match phone.symbol() {
        "P" => [1, 1, 1, 0, 0, 0, 0],
        "B" => [1, 1, 2, 0, 0, 0, 0],
        "T" => [4, 1, 1, 0, 0, 0, 0],
        "D" => [4, 1, 2, 0, 0, 0, 0],
        "K" => [7, 1, 1, 0, 0, 0, 0],
        "G" => [7, 1, 2, 0, 0, 0, 0],
        "CH" => [5, 2, 1, 0, 0, 0, 0],
        "JH" => [5, 2, 2, 0, 0, 0, 0],
        "F" => [2, 3, 1, 0, 0, 0, 0],
        "V" => [2, 3, 2, 0, 0, 0, 0],
        "TH" => [3, 3, 1, 0, 0, 0, 0],
        "DH" => [3, 3, 2, 0, 0, 0, 0],
        "S" => [4, 3, 1, 0, 0, 0, 0],
        "Z" => [4, 3, 2, 0, 0, 0, 0],
        "SH" => [5, 3, 1, 0, 0, 0, 0],
        "ZH" => [5, 3, 2, 0, 0, 0, 0],
        "HH" => [9, 3, 1, 0, 0, 0, 0],
        "M" => [1, 4, 2, 0, 0, 0, 0],
        "N" => [4, 4, 2, 0, 0, 0, 0],
        "NG" => [7, 4, 2, 0, 0, 0, 0],
        "L" => [4, 5, 2, 0, 0, 0, 0],
        "R" => [4, 6, 2, 0, 0, 0, 0],
        "W" => [8, 6, 2, 0, 0, 2, 0],
        "Y" => [6, 6, 2, 0, 0, 0, 0],
        "IY" => [0, 7, 2, 1, 1, 1, 1],
        "IH" => [0, 7, 2, 2, 1, 1, 1],
        "EY" => [0, 7, 2, 3, 1, 1, 2],
        "EH" => [0, 7, 2, 4, 1, 1, 1],
        "AE" => [0, 7, 2, 5, 1, 1, 1],
        "AA" => [0, 7, 2, 6, 3, 1, 1],
        "AO" => [0, 7, 2, 4, 3, 2, 1],
        "AH" => [0, 7, 2, 4, 2, 1, 1],
        "UH" => [0, 7, 2, 2, 3, 2, 1],
        "UW" => [0, 7, 2, 1, 3, 2, 1],
        "ER" => [0, 8, 2, 3, 2, 1, 1],
        "OW" => [0, 7, 2, 3, 3, 2, 3],
        "AY" => [0, 7, 2, 6, 2, 1, 2],
        "AW" => [0, 7, 2, 6, 2, 1, 3],
        "OY" => [0, 7, 2, 4, 3, 2, 2],
        "SIL" => [SILENCE_CODE; N_FEATURES],
        other => unreachable!("no feature row for {other}"),
    }
}

/// Feature-weighted similarity in [0, 1]; 1 exactly for identical phones.
pub fn phone_similarity(a: Phone, b: Phone) -> f64 {
    if a == b {
        return 1.0;
    }
    let (fa, fb) = (features(a), features(b));
    let total: f64 = FEATURE_WEIGHTS.iter().sum();
    let distance: f64 = fa
        .iter()
        .zip(&fb)
        .zip(&FEATURE_WEIGHTS)
        .filter(|((x, y), _)| x != y)
        .map(|(_, w)| w)
        .sum();
    (1.0 - distance / total).max(0.0)
}

const TIE_EPS: f64 = 1e-9;

/// Global alignment by dynamic programming.
///
/// Backtrace ties resolve as Match/Substitution, then Deletion, then
/// Addition, so equal-score alignments are always reported the same way.
pub fn align_sequences(target: &[Phone], annotation: &[Phone], config: &AlignConfig) -> Alignment {
    let (n, m) = (target.len(), annotation.len());
    let gap = config.gap_penalty;
    let width = m + 1;
    let mut table = vec![0.0f64; (n + 1) * width];
    for i in 1..=n {
        table[i * width] = -gap * i as f64;
    }
    for (j, cell) in table[..width].iter_mut().enumerate() {
        *cell = -gap * j as f64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = table[(i - 1) * width + j - 1] + phone_similarity(target[i - 1], annotation[j - 1]);
            let del = table[(i - 1) * width + j] - gap;
            let add = table[i * width + j - 1] - gap;
            table[i * width + j] = diag.max(del).max(add);
        }
    }

    let mut steps = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = table[i * width + j];
        if i > 0 && j > 0 {
            let diag = table[(i - 1) * width + j - 1] + phone_similarity(target[i - 1], annotation[j - 1]);
            if (diag - here).abs() <= TIE_EPS {
                let (t, a) = (i - 1, j - 1);
                steps.push(if target[t] == annotation[a] {
                    AlignmentStep::Match { target: t, annotation: a }
                } else {
                    AlignmentStep::Substitution { target: t, annotation: a }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && (table[(i - 1) * width + j] - gap - here).abs() <= TIE_EPS {
            steps.push(AlignmentStep::Deletion { target: i - 1 });
            i -= 1;
            continue;
        }
        debug_assert!(j > 0);
        steps.push(AlignmentStep::Addition { annotation: j - 1 });
        j -= 1;
    }
    steps.reverse();
    Alignment {
        steps,
        score: table[n * width + m],
    }
}

/// Turns an alignment into one label per target instance.
pub fn assign_labels(
    steps: &[AlignmentStep],
    targets: &[TargetPhoneInstance],
) -> Result<Vec<LabeledTargetPhone>> {
    let mut labels: Vec<Option<PronLabel>> = vec![None; targets.len()];
    let mut aligned = 0usize;
    for step in steps {
        let Some(t) = step.target_index() else {
            continue;
        };
        aligned += 1;
        let slot = labels.get_mut(t).ok_or(Error::CoverageMismatch {
            aligned: t + 1,
            targets: targets.len(),
        })?;
        if slot.is_some() {
            return Err(Error::CoverageMismatch {
                aligned,
                targets: targets.len(),
            });
        }
        *slot = Some(match step.kind() {
            StepKind::Match => PronLabel::Positive,
            _ => PronLabel::Negative,
        });
    }
    if aligned != targets.len() {
        return Err(Error::CoverageMismatch {
            aligned,
            targets: targets.len(),
        });
    }
    Ok(targets
        .iter()
        .zip(labels)
        .map(|(instance, label)| LabeledTargetPhone {
            label: if instance.phone.is_silence() {
                PronLabel::Ignored
            } else {
                label.expect("coverage checked above")
            },
            instance: instance.clone(),
        })
        .collect())
}

/// Labels all target spans of one utterance against its annotation.
///
/// Silence is removed from both sides before aligning. If the span phones
/// and the annotation's target column disagree, the utterance is rejected.
pub fn label_utterance(
    spans: &[TargetPhoneInstance],
    record: Option<&AnnotationRecord>,
    config: &AlignConfig,
) -> Result<Vec<LabeledTargetPhone>> {
    let scored: Vec<usize> = (0..spans.len()).filter(|&i| !spans[i].phone.is_silence()).collect();
    let scored_targets: Vec<TargetPhoneInstance> = scored.iter().map(|&i| spans[i].clone()).collect();
    let mut labels = vec![PronLabel::Ignored; spans.len()];

    match record {
        // Native material: every phone is taken as correctly pronounced.
        None => {
            for &i in &scored {
                labels[i] = PronLabel::Positive;
            }
        }
        Some(record) => {
            let span_phones: Vec<Phone> = scored_targets.iter().map(|t| t.phone).collect();
            let declared: Vec<Phone> = record.target.iter().copied().filter(|p| !p.is_silence()).collect();
            if span_phones != declared {
                return Err(Error::TargetMismatch {
                    utt_id: record.utt_id.clone(),
                    spans: span_phones.iter().map(|p| p.to_string()).collect(),
                    targets: declared.iter().map(|p| p.to_string()).collect(),
                });
            }
            let produced: Vec<Phone> = record.annotated.iter().copied().filter(|p| !p.is_silence()).collect();
            if !scored_targets.is_empty() {
                let steps = if produced.is_empty() {
                    (0..scored_targets.len()).map(|t| AlignmentStep::Deletion { target: t }).collect()
                } else {
                    align_sequences(&span_phones, &produced, config).steps
                };
                for (k, lab) in assign_labels(&steps, &scored_targets)?.into_iter().enumerate() {
                    labels[scored[k]] = lab.label;
                }
            }
        }
    }
    Ok(spans
        .iter()
        .zip(labels)
        .map(|(instance, label)| LabeledTargetPhone {
            instance: instance.clone(),
            label,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTarget {
    pub ordinal: usize,
    pub label: PronLabel,
}

/// Replicates each instance's phone and label over its frames. Frames not
/// covered by any span are `None`.
pub fn expand_to_frames(
    labeled: &[LabeledTargetPhone],
    n_frames: usize,
    inventory: &PhoneInventory,
) -> Result<Vec<Option<FrameTarget>>> {
    let mut frames = vec![None; n_frames];
    for item in labeled {
        let inst = &item.instance;
        if inst.start_frame >= inst.end_frame || inst.end_frame > n_frames {
            return Err(Error::SpanOutOfRange {
                start: inst.start_frame,
                end: inst.end_frame,
                n_frames,
            });
        }
        let target = FrameTarget {
            ordinal: inventory.ordinal(inst.phone),
            label: item.label,
        };
        frames[inst.start_frame..inst.end_frame].fill(Some(target));
    }
    Ok(frames)
}

/// One line of an annotation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub utt_id: String,
    pub target: Vec<Phone>,
    pub annotated: Vec<Phone>,
}

fn normalize_tokens(
    field: &str,
    mapping: &SchemeMapping,
    policy: UnmappablePolicy,
    path: &Path,
    lineno: usize,
) -> Result<Vec<Phone>> {
    let mut out = Vec::new();
    for token in field.split_whitespace() {
        match normalize_phone(token, mapping) {
            Ok(p) => out.push(p),
            Err(e @ Error::UnmappableSymbol { .. }) => match policy {
                UnmappablePolicy::Abort => {
                    return Err(Error::parse(path, lineno, e.to_string()));
                }
                UnmappablePolicy::Skip => {
                    log::warn!("{}:{lineno}: skipping {e}", path.display());
                }
            },
            Err(e) => return Err(Error::parse(path, lineno, e.to_string())),
        }
    }
    Ok(out)
}

/// Reads `utt_id<TAB>target phones<TAB>annotated phones` records.
pub fn read_annotations(
    path: &Path,
    mapping: &SchemeMapping,
    policy: UnmappablePolicy,
) -> Result<BTreeMap<String, AnnotationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, lineno, "expected utt_id<TAB>target<TAB>annotation"));
        }
        let utt_id = fields[0].trim().to_string();
        let record = AnnotationRecord {
            utt_id: utt_id.clone(),
            target: normalize_tokens(fields[1], mapping, policy, path, lineno)?,
            annotated: normalize_tokens(fields[2], mapping, policy, path, lineno)?,
        };
        if out.insert(utt_id.clone(), record).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate utterance {utt_id:?}")));
        }
    }
    Ok(out)
}

pub fn format_annotations<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> String {
    let mut out = String::new();
    for r in records {
        let join = |ps: &[Phone]| ps.iter().map(|p| p.symbol()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{}\t{}\t{}", r.utt_id, join(&r.target), join(&r.annotated));
    }
    out
}

/// Reads `utt_id phone start_frame end_frame` lines, grouped per utterance
/// in file order. Spans of an utterance must be ordered and disjoint.
pub fn read_spans(
    path: &Path,
    mapping: &SchemeMapping,
) -> Result<BTreeMap<String, Vec<TargetPhoneInstance>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: BTreeMap<String, Vec<TargetPhoneInstance>> = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, lineno, "expected utt_id phone start end"));
        }
        let phone = normalize_phone(fields[1], mapping).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let frame = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("bad frame index {s:?}")))
        };
        let (start, end) = (frame(fields[2])?, frame(fields[3])?);
        if end <= start {
            return Err(Error::parse(path, lineno, "span end must exceed start"));
        }
        let list = out.entry(fields[0].to_string()).or_default();
        if let Some(prev) = list.last() {
            if start < prev.end_frame {
                return Err(Error::parse(path, lineno, "span overlaps or precedes the previous one"));
            }
        }
        list.push(TargetPhoneInstance {
            utt_id: fields[0].to_string(),
            phone,
            start_frame: start,
            end_frame: end,
        });
    }
    Ok(out)
}

pub fn format_spans<'a>(spans: impl IntoIterator<Item = &'a TargetPhoneInstance>) -> String {
    let mut out = String::new();
    for s in spans {
        let _ = writeln!(out, "{} {} {} {}", s.utt_id, s.phone, s.start_frame, s.end_frame);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ph(s: &str) -> Vec<Phone> {
        s.split_whitespace().map(|x| x.parse().unwrap()).collect()
    }

    fn inst(phone: &str, start: usize, end: usize) -> TargetPhoneInstance {
        TargetPhoneInstance {
            utt_id: "u".into(),
            phone: phone.parse().unwrap(),
            start_frame: start,
            end_frame: end,
        }
    }

    fn kinds(a: &Alignment) -> Vec<StepKind> {
        a.steps.iter().map(|s| s.kind()).collect()
    }

    #[test]
    fn similarity_anchors() {
        let p = |s: &str| s.parse::<Phone>().unwrap();
        assert_eq!(phone_similarity(p("AE"), p("AE")), 1.0);
        assert!(phone_similarity(p("P"), p("B")) > phone_similarity(p("P"), p("IY")));
        assert_eq!(phone_similarity(Phone::SIL, p("AE")), 0.0);
    }

    #[test]
    fn similarity_is_symmetric_and_one_only_on_identity() {
        for a in Phone::all() {
            for b in Phone::all() {
                let s = phone_similarity(a, b);
                assert!((0.0..=1.0).contains(&s));
                assert_eq!(s, phone_similarity(b, a));
                assert_eq!(s == 1.0, a == b, "{a} {b}");
            }
        }
    }

    #[test]
    fn alignment_unit_cases() {
        let cfg = AlignConfig::default();
        use StepKind::*;
        let a = align_sequences(&ph("K AE T"), &ph("K AE T"), &cfg);
        assert_eq!(kinds(&a), vec![Match, Match, Match]);
        let a = align_sequences(&ph("K AE T"), &ph("K EH T"), &cfg);
        assert_eq!(kinds(&a), vec![Match, Substitution, Match]);
        assert_eq!(a.steps[1], AlignmentStep::Substitution { target: 1, annotation: 1 });
        let a = align_sequences(&ph("K AE T"), &ph("K T"), &cfg);
        assert_eq!(kinds(&a), vec![Match, Deletion, Match]);
        let a = align_sequences(&ph("K AE T"), &ph("K AH AE T"), &cfg);
        assert_eq!(kinds(&a), vec![Match, Addition, Match, Match]);
        assert_eq!(a.steps[1], AlignmentStep::Addition { annotation: 1 });
    }

    #[test]
    fn labels_from_alignment() {
        let cfg = AlignConfig::default();
        let targets = vec![inst("K", 0, 2), inst("AE", 2, 4), inst("T", 4, 6)];
        let a = align_sequences(&ph("K AE T"), &ph("K EH T"), &cfg);
        let lab = assign_labels(&a.steps, &targets).unwrap();
        let got: Vec<_> = lab.iter().map(|l| l.label).collect();
        assert_eq!(got, vec![PronLabel::Positive, PronLabel::Negative, PronLabel::Positive]);

        let a = align_sequences(&ph("K AE T"), &ph("K AH AE T"), &cfg);
        let lab = assign_labels(&a.steps, &targets).unwrap();
        assert!(lab.iter().all(|l| l.label == PronLabel::Positive));
    }

    #[test]
    fn coverage_mismatch() {
        let targets = vec![inst("K", 0, 2), inst("AE", 2, 4)];
        let steps = [AlignmentStep::Match { target: 0, annotation: 0 }];
        assert!(matches!(
            assign_labels(&steps, &targets),
            Err(Error::CoverageMismatch { aligned: 1, targets: 2 })
        ));
    }

    #[test]
    fn silence_is_ignored_and_skipped_in_alignment() {
        let spans = vec![inst("SIL", 0, 2), inst("K", 2, 4), inst("AE", 4, 5), inst("SIL", 5, 7)];
        let record = AnnotationRecord {
            utt_id: "u".into(),
            target: ph("K AE"),
            annotated: ph("SIL K EH"),
        };
        let lab = label_utterance(&spans, Some(&record), &AlignConfig::default()).unwrap();
        let got: Vec<_> = lab.iter().map(|l| l.label).collect();
        assert_eq!(
            got,
            vec![PronLabel::Ignored, PronLabel::Positive, PronLabel::Negative, PronLabel::Ignored]
        );
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let spans = vec![inst("K", 0, 2)];
        let record = AnnotationRecord {
            utt_id: "u".into(),
            target: ph("T"),
            annotated: ph("T"),
        };
        assert!(matches!(
            label_utterance(&spans, Some(&record), &AlignConfig::default()),
            Err(Error::TargetMismatch { .. })
        ));
    }

    #[test]
    fn frame_expansion() {
        let inv = PhoneInventory::default();
        let ae = inv.index_of("AE").unwrap();
        let lab = vec![LabeledTargetPhone {
            instance: inst("AE", 3, 5),
            label: PronLabel::Positive,
        }];
        let frames = expand_to_frames(&lab, 6, &inv).unwrap();
        let want = Some(FrameTarget {
            ordinal: ae,
            label: PronLabel::Positive,
        });
        assert_eq!(frames, vec![None, None, None, want, want, None]);

        assert_eq!(expand_to_frames(&[], 4, &inv).unwrap(), vec![None; 4]);

        let lab = vec![
            LabeledTargetPhone {
                instance: inst("K", 0, 2),
                label: PronLabel::Positive,
            },
            LabeledTargetPhone {
                instance: inst("T", 2, 3),
                label: PronLabel::Negative,
            },
        ];
        let frames = expand_to_frames(&lab, 3, &inv).unwrap();
        let k = inv.index_of("K").unwrap();
        let t = inv.index_of("T").unwrap();
        let ords: Vec<usize> = frames.iter().map(|f| f.unwrap().ordinal).collect();
        assert_eq!(ords, vec![k, k, t]);

        assert!(matches!(
            expand_to_frames(&lab, 2, &inv),
            Err(Error::SpanOutOfRange { start: 2, end: 3, n_frames: 2 })
        ));
    }
}

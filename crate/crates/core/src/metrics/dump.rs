//! Per-phone score dumps, one `utt_id phone start end score label speaker`
//! line per target phone. Labels are `pos`, `neg` or `ign`.

use std::fmt::Write as _;
use std::path::Path;

use crate::annotate::{PronLabel, TargetPhoneInstance};
use crate::downstream::PhoneScore;
use crate::error::{Error, Result};

fn label_text(l: PronLabel) -> &'static str {
    match l {
        PronLabel::Positive => "pos",
        PronLabel::Negative => "neg",
        PronLabel::Ignored => "ign",
    }
}

pub fn format_score_dump(scores: &[PhoneScore]) -> String {
    let mut out = String::new();
    for s in scores {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            s.instance.utt_id,
            s.instance.phone,
            s.instance.start_frame,
            s.instance.end_frame,
            s.score,
            label_text(s.label),
            s.speaker_id
        );
    }
    out
}

pub fn read_score_dump(path: &Path) -> Result<Vec<PhoneScore>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Error::parse(path, k + 1, m.to_string());
        let f: Vec<&str> = line.split_whitespace().collect();
        let [utt, phone, start, end, score, label, speaker] = f[..] else {
            return Err(bad("expected 7 fields: utt_id phone start end score label speaker"));
        };
        let label = match label {
            "pos" => PronLabel::Positive,
            "neg" => PronLabel::Negative,
            "ign" => PronLabel::Ignored,
            _ => return Err(bad("label must be pos, neg or ign")),
        };
        let score: f64 = score.parse().map_err(|_| bad("bad score"))?;
        if !score.is_finite() {
            return Err(bad("score is not finite"));
        }
        out.push(PhoneScore {
            instance: TargetPhoneInstance {
                utt_id: utt.to_string(),
                phone: phone.parse().map_err(|e: Error| bad(&e.to_string()))?,
                start_frame: start.parse().map_err(|_| bad("bad start frame"))?,
                end_frame: end.parse().map_err(|_| bad("bad end frame"))?,
            },
            label,
            score,
            speaker_id: speaker.to_string(),
        });
    }
    Ok(out)
}

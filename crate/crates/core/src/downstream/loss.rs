use ndarray::Array2;

use crate::annotate::{FrameTarget, PronLabel};
use crate::error::{Error, Result};

/// Summed loss over the frames that took part, its gradient with respect to
/// the logits, and how many frames that was.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Array2<f64>,
    pub count: usize,
}

impl LossOutput {
    fn into_mean(mut self) -> Result<(f64, Array2<f64>)> {
        if self.count == 0 {
            return Err(Error::NoSelectedFrames);
        }
        let n = self.count as f64;
        self.grad /= n;
        Ok((self.loss / n, self.grad))
    }
}

/// Softmax cross-entropy summed over frames with a target; frames with
/// `None` are skipped.
pub fn pr_loss_sum(logits: &Array2<f64>, targets: &[Option<usize>]) -> LossOutput {
    assert_eq!(logits.nrows(), targets.len(), "one target slot per frame");
    let mut grad = Array2::zeros(logits.dim());
    let mut loss = 0.0;
    let mut count = 0;
    for (t, target) in targets.iter().enumerate() {
        let Some(y) = *target else { continue };
        let row = logits.row(t);
        let (argmax, max) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &z)| if z > acc.1 { (k, z) } else { acc });
        let others: f64 = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != argmax)
            .map(|(_, &z)| (z - max).exp())
            .sum();
        let lse = max + others.ln_1p();
        loss += lse - row[y];
        let mut g = grad.row_mut(t);
        for (k, &z) in row.iter().enumerate() {
            g[k] = (z - lse).exp();
        }
        g[y] -= 1.0;
        count += 1;
    }
    LossOutput { loss, grad, count }
}

/// Mean frame-level cross-entropy and its gradient.
pub fn pr_loss(logits: &Array2<f64>, targets: &[Option<usize>]) -> Result<(f64, Array2<f64>)> {
    pr_loss_sum(logits, targets).into_mean()
}

/// Binary cross-entropy of the sigmoid of each selected frame's phone node,
/// summed over frames labeled Positive (target 1) or Negative (target 0).
pub fn md_loss_sum(logits: &Array2<f64>, selection: &[Option<FrameTarget>]) -> LossOutput {
    assert_eq!(logits.nrows(), selection.len(), "one selection slot per frame");
    let mut grad = Array2::zeros(logits.dim());
    let mut loss = 0.0;
    let mut count = 0;
    for (t, sel) in selection.iter().enumerate() {
        let Some(FrameTarget { ordinal, label }) = *sel else { continue };
        let y = match label {
            PronLabel::Positive => 1.0,
            PronLabel::Negative => 0.0,
            PronLabel::Ignored => continue,
        };
        let z = logits[[t, ordinal]];
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        let sigmoid = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        grad[[t, ordinal]] = sigmoid - y;
        count += 1;
    }
    LossOutput { loss, grad, count }
}

/// Mean selected-frame BCE; fails when nothing is selected.
pub fn md_loss(logits: &Array2<f64>, selection: &[Option<FrameTarget>]) -> Result<(f64, Array2<f64>)> {
    md_loss_sum(logits, selection).into_mean()
}

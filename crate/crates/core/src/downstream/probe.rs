use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::annotate::{PronLabel, TargetPhoneInstance};
use crate::error::{Error, Result};
use crate::featureio::{combine_layers, combine_layers_backward, LayerWeighting, LayerWeights, UtteranceFeatures};
use crate::phoneset::PhoneInventory;

/// One output node per inventory phone on top of a learned layer mix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    /// `n_phones x dim`; row `i` scores inventory phone `i`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub layers: LayerWeights,
    pub inventory: PhoneInventory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub layer_logits: Vec<f64>,
}

impl ProbeGrads {
    pub fn zeros_like(probe: &LinearProbe) -> Self {
        Self {
            weights: Array2::zeros(probe.weights.dim()),
            bias: Array1::zeros(probe.bias.len()),
            layer_logits: vec![0.0; probe.layers.len()],
        }
    }

    pub fn accumulate(&mut self, other: &ProbeGrads) {
        self.weights += &other.weights;
        self.bias += &other.bias;
        for (a, b) in self.layer_logits.iter_mut().zip(&other.layer_logits) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights *= factor;
        self.bias *= factor;
        for g in &mut self.layer_logits {
            *g *= factor;
        }
    }
}

impl LinearProbe {
    /// Zero-initialized probe with uniform layer weights.
    pub fn new(inventory: PhoneInventory, dim: usize, n_layers: usize, weighting: LayerWeighting) -> Self {
        let n = inventory.len();
        Self {
            weights: Array2::zeros((n, dim)),
            bias: Array1::zeros(n),
            layers: LayerWeights::uniform(n_layers, weighting),
            inventory,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).chain(&self.layers.logits).all(|v| v.is_finite())
    }

    /// `logits[t] = W . frames[t] + b`, no activation.
    pub fn forward(&self, frames: &Array2<f64>) -> Result<Array2<f64>> {
        if frames.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "frames have dim {}, probe expects {}",
                frames.ncols(),
                self.dim()
            )));
        }
        let mut out = frames.dot(&self.weights.t());
        out += &self.bias;
        Ok(out)
    }

    /// Layer mix followed by the linear layer. Returns the mixed frames as
    /// well, since the backward pass needs them.
    pub fn utterance_logits(&self, features: &UtteranceFeatures) -> Result<(Array2<f64>, Array2<f64>)> {
        let mixed = combine_layers(features, &self.layers)?;
        let logits = self.forward(&mixed)?;
        Ok((mixed, logits))
    }

    /// Chain rule from `d loss / d logits` back to every parameter.
    pub fn backward(
        &self,
        features: &UtteranceFeatures,
        mixed: &Array2<f64>,
        grad_logits: &Array2<f64>,
    ) -> Result<ProbeGrads> {
        let weights = grad_logits.t().dot(mixed);
        let bias = grad_logits.sum_axis(Axis(0));
        let grad_mixed = grad_logits.dot(&self.weights);
        let layer_logits = combine_layers_backward(features, &self.layers, &grad_mixed)?;
        Ok(ProbeGrads {
            weights,
            bias,
            layer_logits,
        })
    }
}

/// A scored target phone carrying what evaluation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneScore {
    pub instance: TargetPhoneInstance,
    pub label: PronLabel,
    pub score: f64,
    pub speaker_id: String,
}

/// Mean pre-activation output of the instance's phone node over its span.
pub fn phone_score(logits: &Array2<f64>, instance: &TargetPhoneInstance, inventory: &PhoneInventory) -> Result<f64> {
    let (start, end) = (instance.start_frame, instance.end_frame);
    if start >= end || end > logits.nrows() {
        return Err(Error::SpanOutOfRange {
            start,
            end,
            n_frames: logits.nrows(),
        });
    }
    let node = inventory.ordinal(instance.phone);
    let sum: f64 = (start..end).map(|t| logits[[t, node]]).sum();
    Ok(sum / (end - start) as f64)
}

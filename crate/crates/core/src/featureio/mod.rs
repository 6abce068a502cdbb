//! Frame-level feature tensors: the MPKF interchange format and the learned
//! layer combination that feeds the probe.
//!
//! MPKF layout (all little-endian):
//!
//! ```text
//! "MPKF" | version u8 | L u32 | T u32 | d u32 | frame_rate f32 | L*T*d f32
//! ```
//!
//! The payload is layer-major, then frame-major. Layer 0 holds the encoder
//! output, layers 1.. the transformer layers.

mod manifest;

pub use manifest::{
    load_corpus, validate_manifest, DatasetManifest, ManifestEntry, ManifestReport, Utterance,
};

use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::atomic_write;

pub const MAGIC: [u8; 4] = *b"MPKF";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 * 3 + 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureHeader {
    pub n_layers: usize,
    pub n_frames: usize,
    pub dim: usize,
    pub frame_rate_hz: f32,
}

/// Activations of one utterance, `n_layers x n_frames x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceFeatures {
    pub utt_id: String,
    pub speaker_id: String,
    pub n_layers: usize,
    pub n_frames: usize,
    pub dim: usize,
    pub frame_rate_hz: f32,
    pub data: Vec<f32>,
}

impl UtteranceFeatures {
    pub fn new(
        utt_id: impl Into<String>,
        speaker_id: impl Into<String>,
        n_layers: usize,
        n_frames: usize,
        dim: usize,
        frame_rate_hz: f32,
        data: Vec<f32>,
    ) -> Result<Self> {
        if n_layers == 0 || n_frames == 0 || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "feature tensor must be non-empty, got {n_layers}x{n_frames}x{dim}"
            )));
        }
        if data.len() != n_layers * n_frames * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_layers}x{n_frames}x{dim} tensor",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            utt_id: utt_id.into(),
            speaker_id: speaker_id.into(),
            n_layers,
            n_frames,
            dim,
            frame_rate_hz,
            data,
        })
    }

    pub fn header(&self) -> FeatureHeader {
        FeatureHeader {
            n_layers: self.n_layers,
            n_frames: self.n_frames,
            dim: self.dim,
            frame_rate_hz: self.frame_rate_hz,
        }
    }

    /// `n_frames x dim` slice of one layer.
    pub fn layer(&self, l: usize) -> &[f32] {
        let size = self.n_frames * self.dim;
        &self.data[l * size..(l + 1) * size]
    }

    /// Normalizes every (layer, frame) vector to zero mean and unit variance.
    pub fn layer_normalized(&self) -> Self {
        let mut out = self.clone();
        for frame in out.data.chunks_mut(self.dim) {
            let n = frame.len() as f64;
            let mean = frame.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = frame.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            let inv = 1.0 / (var + 1e-5).sqrt();
            for v in frame.iter_mut() {
                *v = ((*v as f64 - mean) * inv) as f32;
            }
        }
        out
    }
}

pub fn encode_features(f: &UtteranceFeatures) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * f.data.len());
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(f.n_layers as u32).to_le_bytes());
    out.extend_from_slice(&(f.n_frames as u32).to_le_bytes());
    out.extend_from_slice(&(f.dim as u32).to_le_bytes());
    out.extend_from_slice(&f.frame_rate_hz.to_le_bytes());
    for v in &f.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_features(f: &UtteranceFeatures, path: &Path) -> Result<()> {
    atomic_write(path, &encode_features(f))
}

fn parse_header(bytes: &[u8], path: &Path, file_len: u64) -> Result<FeatureHeader> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile {
            path: path.into(),
            expected: HEADER_LEN as u64,
            found: file_len,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: magic,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            path: path.into(),
            expected: HEADER_LEN as u64,
            found: file_len,
        });
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version: bytes[4],
        });
    }
    let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let header = FeatureHeader {
        n_layers: u(5),
        n_frames: u(9),
        dim: u(13),
        frame_rate_hz: f32::from_le_bytes(bytes[17..21].try_into().unwrap()),
    };
    if header.n_layers == 0 || header.n_frames == 0 || header.dim == 0 {
        return Err(Error::InvalidHeader {
            path: path.into(),
            message: format!(
                "zero dimension in {}x{}x{}",
                header.n_layers, header.n_frames, header.dim
            ),
        });
    }
    Ok(header)
}

/// Reads only the fixed-size header.
pub fn read_header(path: &Path) -> Result<FeatureHeader> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut buf = Vec::with_capacity(HEADER_LEN);
    file.by_ref()
        .take(HEADER_LEN as u64)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    parse_header(&buf, path, file_len)
}

pub fn decode_features(bytes: &[u8], path: &Path) -> Result<UtteranceFeatures> {
    let h = parse_header(bytes, path, bytes.len() as u64)?;
    let count = h.n_layers as u64 * h.n_frames as u64 * h.dim as u64;
    let expected = HEADER_LEN as u64 + 4 * count;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::TruncatedFile {
            path: path.into(),
            expected,
            found,
        });
    }
    if found > expected {
        return Err(Error::InvalidHeader {
            path: path.into(),
            message: format!("{} trailing bytes after payload", found - expected),
        });
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    UtteranceFeatures::new(stem, "", h.n_layers, h.n_frames, h.dim, h.frame_rate_hz, data)
}

/// Reads an MPKF file. The utterance id defaults to the file stem and the
/// speaker is left empty; manifests fill both in.
pub fn read_features(path: &Path) -> Result<UtteranceFeatures> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerWeighting {
    /// Weights are `softmax(logits)`.
    #[default]
    Softmax,
    /// Weights are the logits themselves.
    Raw,
}

/// Learnable per-layer mixing logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub logits: Vec<f64>,
    #[serde(default)]
    pub mode: LayerWeighting,
}

impl LayerWeights {
    pub fn uniform(n_layers: usize, mode: LayerWeighting) -> Self {
        let init = match mode {
            LayerWeighting::Softmax => 0.0,
            LayerWeighting::Raw => 1.0 / n_layers as f64,
        };
        Self {
            logits: vec![init; n_layers],
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        match self.mode {
            LayerWeighting::Softmax => softmax(&self.logits),
            LayerWeighting::Raw => self.logits.clone(),
        }
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_layers(f: &UtteranceFeatures, w: &LayerWeights) -> Result<()> {
    if w.len() != f.n_layers {
        return Err(Error::DimensionMismatch(format!(
            "{} layer weights for {} layers",
            w.len(),
            f.n_layers
        )));
    }
    Ok(())
}

/// `out[t] = sum_l weight_l * data[l][t]`, accumulated in f64.
pub fn combine_layers(f: &UtteranceFeatures, w: &LayerWeights) -> Result<Array2<f64>> {
    check_layers(f, w)?;
    let weights = w.weights();
    let mut out = Array2::<f64>::zeros((f.n_frames, f.dim));
    let flat = out.as_slice_mut().expect("standard layout");
    for (l, &wl) in weights.iter().enumerate() {
        for (o, &x) in flat.iter_mut().zip(f.layer(l)) {
            *o += wl * x as f64;
        }
    }
    Ok(out)
}

/// Gradient of a loss with respect to the layer logits, given the gradient
/// `grad_out` with respect to the combined `T x d` output.
pub fn combine_layers_backward(
    f: &UtteranceFeatures,
    w: &LayerWeights,
    grad_out: &Array2<f64>,
) -> Result<Vec<f64>> {
    check_layers(f, w)?;
    if grad_out.dim() != (f.n_frames, f.dim) {
        return Err(Error::DimensionMismatch(format!(
            "output gradient {:?} for {}x{} features",
            grad_out.dim(),
            f.n_frames,
            f.dim
        )));
    }
    let g = grad_out.as_standard_layout();
    let g = g.as_slice().expect("standard layout");
    // <G, X_l> for every layer.
    let inner: Vec<f64> = (0..f.n_layers)
        .map(|l| g.iter().zip(f.layer(l)).map(|(&gi, &x)| gi * x as f64).sum())
        .collect();
    Ok(match w.mode {
        LayerWeighting::Raw => inner,
        LayerWeighting::Softmax => {
            // d out / d z_l = a_l (X_l - out), so the gradient is a_l (<G,X_l> - <G,out>).
            let a = w.weights();
            let mixed: f64 = a.iter().zip(&inner).map(|(ai, gi)| ai * gi).sum();
            a.iter().zip(&inner).map(|(ai, gi)| ai * (gi - mixed)).collect()
        }
    })
}

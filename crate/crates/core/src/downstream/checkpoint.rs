//! Probe checkpoints.
//!
//! ```text
//! "MPKP" | version u8 | meta_len u32 | meta JSON | W f64[n*d] | b f64[n] | layer logits f64[L]
//! ```
//!
//! The JSON block holds the inventory order, shapes, the training config and
//! a free-form provenance map. Parameters are stored as raw little-endian
//! f64, so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::downstream::probe::LinearProbe;
use crate::downstream::train::TrainConfig;
use crate::error::{Error, Result};
use crate::featureio::{LayerWeighting, LayerWeights};
use crate::phoneset::{Phone, PhoneInventory};
use crate::util::atomic_write;

const MAGIC: [u8; 4] = *b"MPKP";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub probe: LinearProbe,
    pub config: TrainConfig,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    inventory: Vec<Phone>,
    dim: usize,
    n_layers: usize,
    layer_weighting: LayerWeighting,
    config: TrainConfig,
    provenance: BTreeMap<String, String>,
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let probe = &ck.probe;
    let meta = Meta {
        inventory: probe.inventory.phones().to_vec(),
        dim: probe.dim(),
        n_layers: probe.layers.len(),
        layer_weighting: probe.layers.mode,
        config: ck.config.clone(),
        provenance: ck.provenance.clone(),
    };
    let meta = serde_json::to_vec(&meta).expect("checkpoint metadata serializes");
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    let params = probe
        .weights
        .iter()
        .chain(probe.bias.iter())
        .chain(probe.layers.logits.iter());
    for v in params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let truncated = |expected: usize| Error::TruncatedFile {
        path: path.into(),
        expected: expected as u64,
        found: bytes.len() as u64,
    };
    if bytes.len() < 9 {
        return Err(truncated(9));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: magic,
        });
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version: bytes[4],
        });
    }
    let meta_len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let meta_end = 9 + meta_len;
    if bytes.len() < meta_end {
        return Err(truncated(meta_end));
    }
    let meta: Meta = serde_json::from_slice(&bytes[9..meta_end]).map_err(|e| Error::InvalidHeader {
        path: path.into(),
        message: e.to_string(),
    })?;
    let inventory = PhoneInventory::from_phones(meta.inventory)?;
    let n = inventory.len();
    let n_params = n * meta.dim + n + meta.n_layers;
    let expected = meta_end + 8 * n_params;
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    if bytes.len() > expected {
        return Err(Error::InvalidHeader {
            path: path.into(),
            message: "trailing bytes after parameters".into(),
        });
    }
    let values: Vec<f64> = bytes[meta_end..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let (w, rest) = values.split_at(n * meta.dim);
    let (b, logits) = rest.split_at(n);
    let probe = LinearProbe {
        weights: Array2::from_shape_vec((n, meta.dim), w.to_vec()).expect("shape checked"),
        bias: Array1::from(b.to_vec()),
        layers: LayerWeights {
            logits: logits.to_vec(),
            mode: meta.layer_weighting,
        },
        inventory,
    };
    Ok(Checkpoint {
        probe,
        config: meta.config,
        provenance: meta.provenance,
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    atomic_write(path, &encode_checkpoint(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.into()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

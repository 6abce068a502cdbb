//! Phone-level mispronunciation detection on top of frozen speech-model
//! features: phone sets, label derivation, feature files, linear probes,
//! detection metrics and the cross-validation protocol around them.

pub mod annotate;
pub mod downstream;
pub mod error;
pub mod featureio;
pub mod metrics;
pub mod phoneset;
pub mod protocol;
pub mod synth;
pub mod util;

pub use error::{Error, ErrorKind, Result};

use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the command line to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("config error: {0}")]
    Config(String),

    #[error("empty phone symbol")]
    EmptySymbol,
    #[error("unmappable symbol {symbol:?} in scheme {scheme}")]
    UnmappableSymbol { symbol: String, scheme: String },
    #[error("{symbol:?} is not a canonical phone")]
    UnknownPhone { symbol: String },
    #[error("duplicate symbol {0:?} in inventory")]
    DuplicateSymbol(String),
    #[error("inventory has {found} entries, expected {expected}")]
    WrongCount { found: usize, expected: usize },

    #[error("alignment covers {aligned} targets but {targets} were given")]
    CoverageMismatch { aligned: usize, targets: usize },
    #[error("span [{start}, {end}) does not fit in {n_frames} frames")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        n_frames: usize,
    },
    #[error("utterance {utt_id}: span phones {spans:?} disagree with annotated targets {targets:?}")]
    TargetMismatch {
        utt_id: String,
        spans: Vec<String>,
        targets: Vec<String>,
    },

    #[error("{path}: bad magic {found:?}")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u8 },
    #[error("{path}: truncated file (expected {expected} bytes, found {found})")]
    TruncatedFile {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("{path}: invalid header: {message}")]
    InvalidHeader { path: PathBuf, message: String },
    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("duplicate utterance id {0:?}")]
    DuplicateUttId(String),
    #[error("no data for utterance {0:?}")]
    MissingUtterance(String),

    #[error("no selected frames in loss")]
    NoSelectedFrames,
    #[error("posterior row {row} sums to {sum}")]
    RowNotNormalized { row: usize, sum: f64 },
    #[error("value {value} outside [0, 1] for {name}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("phone {phone} needs both classes (positives {n_pos}, negatives {n_neg})")]
    DegenerateClass {
        phone: String,
        n_pos: usize,
        n_neg: usize,
    },
    #[error("no phone passes the inclusion filter")]
    NoIncludedPhones,
    #[error("non-finite {0} during training")]
    Diverged(&'static str),

    #[error("{k} folds requested but only {groups} groups available")]
    TooManyFolds { k: usize, groups: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::TooManyFolds { .. } => ErrorKind::Config,
            Error::NoSelectedFrames
            | Error::DegenerateClass { .. }
            | Error::NoIncludedPhones
            | Error::Diverged(_)
            | Error::OutOfRange { .. }
            | Error::RowNotNormalized { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

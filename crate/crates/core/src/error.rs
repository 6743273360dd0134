//! Crate-wide error type.

use std::path::PathBuf;

/// A parse failure tied to one line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number in the source file.
    pub line: usize,
    pub message: String,
}

/// Errors produced by dataset loading, feature extraction, training,
/// model I/O and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error("missing required field `{0}`")]
    MissingRequired(&'static str),

    #[error("bad timestamp in `{field}`: {detail}")]
    BadTimestamp { field: &'static str, detail: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate event id `{0}`")]
    DuplicateEventId(String),

    #[error("{} invalid record(s), first at line {}: {}", .0.len(), .0[0].line, .0[0].message)]
    InvalidRecords(Vec<LineError>),

    #[error("detecting deadline must be >= 0, got {0}")]
    NegativeDeadline(f64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("targets must be exactly 0 or 1, found {0}")]
    NonBinaryTargets(f64),

    #[error("dataset must be fully labeled for training")]
    MissingLabels,

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("keep count must be in 1..={candidates}, got {keep}")]
    BadU1 { keep: usize, candidates: usize },

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("dataset contains a single class; both labels are required")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

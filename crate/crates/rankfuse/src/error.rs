use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),

    #[error("fewer than two usable rows remain after filtering ({kept} kept, {dropped} dropped)")]
    EmptyAfterFilter { kept: usize, dropped: usize },

    #[error("cannot parse `{content}` at data row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        content: String,
    },

    #[error("table has no date column; season split requires one")]
    NoDates,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("zero variance in input sequence")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("non-finite value in input sequence")]
    NonFinite,

    #[error("rankings cover different item sets")]
    ItemSetMismatch,

    #[error("need at least {need} rows to fit, got {got}")]
    TooFewRows { need: usize, got: usize },

    #[error("model requires feature `{0}`, absent from the table")]
    FeatureMismatch(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("empty input")]
    Empty,

    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

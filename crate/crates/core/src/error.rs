use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples for differencing: need more than {order}, got {len}")]
    InsufficientSamples { len: usize, order: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("warm-up incomplete: {have} of {need} samples")]
    WarmUpIncomplete { have: usize, need: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(f64),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid generator spec: {0}")]
    InvalidGeneratorSpec(String),

    #[error("non-stationary realization: |X| exceeded {limit} at step {step}")]
    NonStationary { step: usize, limit: f64 },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: channel {channel} out of range ({columns} columns)")]
    ChannelOutOfRange {
        path: PathBuf,
        channel: usize,
        columns: usize,
    },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("batch of {n} samples is too short for mk + d = {warm_up}")]
    BatchTooShort { n: usize, warm_up: usize },

    #[error("run diverged in trial {trial} at sample {index}")]
    Diverged { trial: usize, index: usize },

    #[error("no stable rate in grid")]
    NoStableRate,

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

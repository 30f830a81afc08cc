use std::path::PathBuf;

use thiserror::Error;

use crate::fields::io::FieldFileError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (wrong rank, bad grid, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} outside validity window [{lo}, {hi}]")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("snapshot times are not strictly increasing at index {0}")]
    NonMonotoneTimes(usize),

    #[error("snapshot series needs at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),

    #[error("step size check failed: courant number {courant:.4} exceeds limit {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("invalid step size dt = {0}")]
    InvalidStep(f64),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("field file {path}: {source}")]
    FieldFile {
        path: PathBuf,
        #[source]
        source: FieldFileError,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

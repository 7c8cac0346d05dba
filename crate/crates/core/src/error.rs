//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("series '{name}': insufficient observations ({count}), need at least 2")]
    InsufficientObservations { name: String, count: usize },

    #[error("series '{name}': duplicate date {date}")]
    DuplicateDate { name: String, date: String },

    #[error("series '{name}': non-finite value at {context}")]
    NonFinite { name: String, context: String },

    #[error("series '{name}': requested span {which} {month} lies outside coverage {first}..{last}")]
    CoverageExceeded {
        name: String,
        which: &'static str,
        month: String,
        first: String,
        last: String,
    },

    #[error("no common span: series coverages have empty intersection")]
    EmptySpanIntersection,

    #[error("universe ticker '{0}' has no price series among the inputs")]
    MissingSector(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("insufficient history: {available} training blocks available, {required} required")]
    InsufficientHistory { available: usize, required: usize },

    #[error("reservoir initialization failed after {attempts} attempts: {reason}")]
    ReservoirInit { attempts: usize, reason: String },

    #[error("model not fitted: {0}")]
    NotFitted(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter length mismatch: architecture needs {expected} entries, got {actual}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },

    #[error("degenerate level set at {point:?}: |grad phi| = {norm:e}")]
    DegenerateLevelSet { point: Vec<f64>, norm: f64 },

    #[error("point {point:?} is not on the interface (|phi| = {phi:e})")]
    NotOnInterface { point: Vec<f64>, phi: f64 },

    #[error("empty point class: {0}")]
    EmptyPointClass(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch} (batch seed {seed}, batch epoch {batch_epoch}): {what}")]
    Diverged {
        epoch: usize,
        seed: u64,
        batch_epoch: usize,
        what: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown benchmark `{0}` (expected flower2d, circle2d or sphere_nd)")]
    UnknownBenchmark(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

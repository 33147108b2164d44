use thiserror::Error;

/// Errors raised by grid construction, operators and the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: String, found: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("interior size {n} cannot be coarsened as requested; valid sizes near it: {valid:?}")]
    IncompatibleSize { n: usize, valid: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("zero diagonal entry on level {level} at node ({i}, {j})")]
    ZeroDiagonal { level: usize, i: usize, j: usize },

    #[error("source node ({i}, {j}) lies outside the {nx}x{ny} grid")]
    SourceOutsideGrid { i: usize, j: usize, nx: usize, ny: usize },

    #[error("tuning failed on level {level}: every candidate produced a non-finite loss")]
    Tuning { level: usize },

    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside the memory window [{lo}, 0]")]
    OutOfWindow { t: f64, lo: f64 },

    #[error("non-finite {what} at state with x(0) = {endpoint:?}")]
    NonFinite {
        what: &'static str,
        endpoint: Vec<f64>,
    },

    #[error("trajectory exploded at t = {t}")]
    Exploded { t: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("{0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

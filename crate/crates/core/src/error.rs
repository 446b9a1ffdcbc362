//! Crate-wide error type.

use thiserror::Error;

/// Errors raised while building, solving or analysing stability programs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("nonlinear product: both operands carry decision variables")]
    NonlinearProduct,
    #[error("affine substitution with zero scale")]
    ZeroScale,
    #[error("missing assignment for decision variable {0}")]
    MissingAssignment(u32),
    #[error("invalid interval grid: {0}")]
    InvalidGrid(String),
    #[error("invalid delay system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("SDPA format error at line {line}: {msg}")]
    SdpaFormat { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(String),
    #[error("no verdict change across the bisection bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the factorization, filtering and signal layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix entry {value} at ({row}, {col}): entries must be finite and nonnegative")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("column {0} sums to zero and cannot be normalized; floor the matrix first")]
    ZeroColumn(usize),

    #[error("basis column {0} received no mass; re-initialize the factorization")]
    EmptyBasis(usize),

    #[error("column {col} sums to {sum}, expected 1")]
    NotStochastic { col: usize, sum: f64 },

    #[error("nonpositive value {value} at index {index} where a strictly positive value is required")]
    NonPositive { index: usize, value: f64 },

    #[error("zero denominator in posterior for row {0}")]
    ZeroDenominator(usize),

    #[error("lagrange multiplier solver did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("signal-to-noise ratio is infinite: the error signal has zero energy")]
    InfiniteSnr,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

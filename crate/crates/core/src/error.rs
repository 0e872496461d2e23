use thiserror::Error;

/// Errors raised by the laboratory's numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid datum: {0}")]
    InvalidDatum(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factorial {k}! overflows the scalar range")]
    FactorialOverflow { k: usize },

    #[error("search region is empty")]
    EmptySearch,

    #[error("direction sample is empty")]
    EmptyDirections,

    #[error("blow-up fit rejected: {0}")]
    FitRejected(String),

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: String },

    #[error("semigroup supremum vanished at t = {t}")]
    VanishingSemigroup { t: f64 },

    #[error("report I/O: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;

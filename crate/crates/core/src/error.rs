use thiserror::Error;

/// Errors raised by the numerical kernels and analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("exponent {exponent} exceeds the overflow guard {guard}")]
    Saturation { exponent: f64, guard: f64 },

    #[error("division guard: {0}")]
    DivisionGuard(String),

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("window not covered: {0}")]
    WindowNotCovered(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

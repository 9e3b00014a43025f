use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("germ not sewable on [{s}, {t}]: level differences stopped decreasing at level {level}")]
    NotSewable { s: f64, t: f64, level: usize },

    #[error("quadrature failed: achieved error {achieved:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("Cholesky factorisation failed at pivot {pivot} after {attempts} jitter attempts")]
    Cholesky { pivot: usize, attempts: usize },

    #[error("holder exponent undefined: {0}")]
    UndefinedExponent(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::ShapeMismatch(msg.into()))
}

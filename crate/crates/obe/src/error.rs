use thiserror::Error;

/// Errors produced by model construction, linear algebra and the sweep driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A matrix that must be positive semidefinite has a significantly
    /// negative eigenvalue.
    #[error(
        "matrix not positive semidefinite: min eigenvalue {min_eig:.3e} (tolerance {tol:.3e})"
    )]
    NotPositiveSemidefinite { min_eig: f64, tol: f64 },

    /// A linear system could not be solved reliably.
    #[error("singular or ill-conditioned system: {0}")]
    Singular(String),

    /// Bad argument to a numeric routine.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

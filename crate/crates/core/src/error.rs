use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Line-search failure is not an error; it is
/// reported through [`crate::linesearch::SearchStatus`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("search direction is not a descent direction (slope {slope:e})")]
    NotDescentDirection { slope: f64 },

    #[error("curvature pair has s.y = {sy:e} <= 0")]
    NonPositiveCurvature { sy: f64 },

    #[error("zero vector where a non-zero vector is required: {0}")]
    ZeroVector(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lengthening parameter l = {l:e} must exceed 2*eps_g/m = {bound:e}")]
    LengtheningTooShort { l: f64, bound: f64 },

    #[error("(s, y) does not satisfy the eigenvalue-interval inequality for [{mu}, {big_l}]")]
    OutsideInterval { mu: f64, big_l: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

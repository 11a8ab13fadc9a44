use thiserror::Error;

/// Errors produced by the numerical kernels and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: entry ({u},{v}) differs from the conjugate of ({v},{u})")]
    NotHermitian { u: usize, v: usize },

    #[error("non-finite entry at ({0},{1})")]
    NonFinite(usize, usize),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires an exact mapping, which this oracle does not provide")]
    ExactUnavailable,
}

pub type Result<T> = std::result::Result<T, Error>;

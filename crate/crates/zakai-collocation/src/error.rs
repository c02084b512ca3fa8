//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong building kernels, grids, interpolation systems,
/// or running an experiment.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two collocation points coincide, so the interpolation matrix is singular.
    #[error("duplicate collocation points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    /// The interpolation matrix failed its Cholesky factorization.
    #[error("interpolation matrix is not numerically positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A linear solve broke down (singular or non-finite pivot).
    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    /// An experiment configuration could not be parsed or is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Reading or writing experiment artifacts failed. The message leaves the
    /// detail to the wrapped source so error chains print it once.
    #[error("i/o error")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failed.
    #[error("json error")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

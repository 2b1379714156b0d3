//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("pole must lie strictly inside the unit disk, got |p| = {0}")]
    InvalidPole(f64),

    #[error("filter size must be at least 1")]
    InvalidSize,

    #[error("band edges must satisfy 0 <= lo < hi < 2π, got [{lo}, {hi}]")]
    InvalidBand { lo: f64, hi: f64 },

    #[error(
        "band design infeasible: no pole radius in ({lo}, {hi}) meets the half-power condition"
    )]
    DesignInfeasible { lo: f64, hi: f64 },

    #[error("input signal is empty")]
    EmptySignal,

    #[error("signal too short: need at least {0} samples")]
    SignalTooShort(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian within tolerance (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigenvalue list is empty")]
    EmptyEigenvalues,

    #[error("frequency extraction found {} local minima but the numerical rank is {needed}", found.len())]
    ExtractionDeficit { needed: usize, found: Vec<f64> },

    #[error("frequency band covers every DFT bin; cannot estimate the noise variance")]
    EstimationInfeasible,

    #[error("duplicate frequencies make the least-squares system ill-posed")]
    IllPosed,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

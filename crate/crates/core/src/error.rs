use crate::basis::FreqVector;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("frequency vector has length {got}, basis dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("series are defined on different bases")]
    BasisMismatch,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("product support {support} exceeds cap {cap} and the truncation threshold is zero")]
    CapacityExceeded { support: usize, cap: usize },

    #[error("time {t} is not a point of the quadrature grid (dt = {dt}, {len} samples)")]
    OffGrid { t: f64, dt: f64, len: usize },

    #[error("invalid nonlinearity: {0}")]
    InvalidSpec(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "Picard iteration did not contract within {max_iters} iterations \
         (last sup-distance {last_distance:.3e}, ratios {ratios:?})"
    )]
    ContractionFailure {
        max_iters: usize,
        last_distance: f64,
        ratios: Vec<f64>,
    },

    #[error("Picard iterate left the ball of radius {bound:.6e} (a-norm {norm:.6e})")]
    BallViolation { norm: f64, bound: f64 },

    #[error("support is not closed under the nonlinearity within radius {radius}; escaping modes: {escaping:?}")]
    SupportNotClosed {
        radius: u32,
        escaping: Vec<FreqVector>,
    },

    #[error("adaptive integrator failed: {0}")]
    IntegratorFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

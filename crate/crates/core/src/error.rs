use thiserror::Error;

/// Errors produced by the optimizer library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("probability {0} is outside the supported domain")]
    ProbabilityDomain(f64),

    #[error("fitness of individual {index} is not finite ({value})")]
    NonFiniteFitness { index: usize, value: f64 },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("dimension {0} is not discrete")]
    NotDiscrete(usize),

    #[error("mean {value} of dimension {dim} lies outside the interior threshold range")]
    ExteriorMean { dim: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

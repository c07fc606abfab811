use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("dataset has no channels")]
    EmptyChannels,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance is singular or not positive definite (eigenvalue ratio {ratio:e})")]
    SingularCovariance { ratio: f64 },

    #[error("matrix is not invertible (singular value ratio {ratio:e})")]
    SingularMatrix { ratio: f64 },

    #[error("degenerate sample: all values are equal")]
    DegenerateSample,

    #[error("mutual information estimation supports at most 3 channels, got {0}")]
    DimensionTooHigh(usize),

    #[error("estimator failure: negentropy estimate {0} is below the -0.1 floor")]
    EstimatorFailure(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("quadrature grid captures only {mass} of the probability mass")]
    InsufficientCoverage { mass: f64 },

    #[error("linear transform is singular")]
    SingularTransform,

    #[error("solver diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("gain matrix has an all-zero row or column")]
    DegenerateGain,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

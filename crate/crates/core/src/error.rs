use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("estimator undefined: {0}")]
    UndefinedEstimator(&'static str),

    #[error("coincidence probability undefined at boundary angle {theta}")]
    UndefinedAtBoundary { theta: f64 },

    #[error("visibility undefined: {0}")]
    UndefinedVisibility(&'static str),

    #[error("quadrature needs at least {min} samples, got {got}")]
    QuadratureTooCoarse { got: usize, min: usize },

    #[error("insufficient angular coverage: {populated} populated phase bins, need {required}")]
    InsufficientCoverage { populated: usize, required: usize },

    #[error("not enough samples: {got}, need {min}")]
    TooFewSamples { got: usize, min: usize },
}

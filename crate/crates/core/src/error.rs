use thiserror::Error;

/// Errors raised by generators, factorizations and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("could not find a nonnegative definite embedding: minimum eigenvalue {min:e}")]
    EmbeddingInfeasible { min: f64 },

    #[error("intensity bound violated at ({x}, {y}): value {value} exceeds bound {bound}")]
    BoundViolated { x: f64, y: f64, value: f64, bound: f64 },

    #[error("mean offspring count {0} is not subcritical (must be < 1)")]
    Supercritical(f64),

    #[error("point cap of {0} exceeded")]
    TooManyPoints(usize),

    #[error("jump band ({lo}, {hi}] carries no Levy mass")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("invalid Levy measure: {0}")]
    InvalidMeasure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

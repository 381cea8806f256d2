use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("grid too small: boundary value {boundary:e} exceeds {threshold:e}")]
    GridTooSmall { boundary: f64, threshold: f64 },

    #[error("aliasing detected: {leak:e} of the convolution mass falls outside the grid")]
    AliasingDetected { leak: f64 },

    #[error("function {index} has zero mass")]
    MassZero { index: usize },

    #[error("class violation: {0}")]
    ClassViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by basis construction, matrix kernels and model fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis specification: {0}")]
    InvalidBasisSpec(String),
    #[error("design matrix is rank deficient at relative tolerance {tol:e}")]
    RankDeficientDesign { tol: f64 },
    #[error("operation requires class labels")]
    MissingLabels,
    #[error("one of the classes has no samples")]
    EmptyClass,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is numerically singular: smallest eigenvalue {0:e}")]
    NearSingular(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("penalized Gram matrix is not positive definite")]
    PenaltyNotPd,
    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("dataset basis does not match the model basis")]
    BasisMismatch,
    #[error("dataset centering does not match the model center: {0}")]
    CenteringMismatch(String),
    #[error("data is not whitened: covariance deviates from identity by {0:e}")]
    NotWhitened(f64),
    #[error("component index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("covariance matrix is not symmetric positive definite")]
    NonPdCovariance,
    #[error("reduction rank {p} exceeds the usable rank at tolerance {tol:e}")]
    RankTooHigh { p: usize, tol: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure graph: {0}")]
    InvalidGraph(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix not Hermitian: relative asymmetry {0:.3e}")]
    NotHermitian(f64),

    #[error("solvability criterion violated: offending eigenvalue {0:.6e} above tolerance {1:.1e}")]
    CriterionViolated(f64, f64),

    #[error("grid oracle guard: {0} real parameters exceed the limit of {1}")]
    DimensionGuard(usize, usize),

    #[error("grid oracle guard: {0} steps per axis exceed the limit of {1}")]
    StepGuard(usize, usize),

    #[error("resolvent I - L(Z)A is singular or outside the convergence region: {0}")]
    SingularResolvent(String),

    #[error("state matrix unstable: spectral radius {0:.6e} >= 1")]
    UnstableA(f64),

    #[error("certificate verification failed: {0}")]
    Verification(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

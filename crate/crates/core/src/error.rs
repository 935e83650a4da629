use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("multi-index has no entry at slot {0}")]
    UnderflowAt(usize),
    #[error("multi-index references slot {slot} but only {len} variables were supplied")]
    SupportExceeded { slot: usize, len: usize },
    #[error("grid functions of length {left} and {right} cannot be combined")]
    IncompatibleGrids { left: usize, right: usize },
    #[error("Wick exponential needs a first-order argument; found a coefficient of order {0}")]
    NotFirstOrder(usize),
    #[error("kernel derivative is singular on the diagonal t = s = {0}")]
    SingularDiagonal(f64),
    #[error("norm bound hypotheses cannot be verified: {0}")]
    HypothesesUnverifiable(String),
    #[error("integrand lives on {got} nodes, field model on {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("unsupported field for this operation: {0}")]
    UnsupportedField(String),
    #[error("negative heat-kernel variance r(t) = {value:.6e} at t = {t:.6}")]
    NegativeVariance { t: f64, value: f64 },
    #[error("deterministic stepper unstable: {0}")]
    UnstableStep(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeVariance { .. } | Error::UnstableStep(_) | Error::SingularDiagonal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DsrnError {
    #[error("domain error: {0}")]
    Domain(String),

    /// Root multiset is stored as (re, im) pairs.
    #[error("inadmissible parameters: {reason}; roots found: {roots:?}")]
    Inadmissible { reason: String, roots: Vec<(f64, f64)> },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("ill-conditioned Bessel order {0}")]
    IllConditionedOrder(String),

    #[error("branch error: {0}")]
    Branch(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("numerical failure: {message} (iterate norms tail: {norms:?})")]
    NumericalFailure { message: String, norms: Vec<f64> },

    #[error("step size underflow at x = {x}")]
    Stiffness { x: f64 },

    #[error("pole: {0}")]
    Pole(String),

    #[error("extraction inconsistency: spread {spread:e} exceeds {threshold:e}")]
    ExtractionInconsistency { spread: f64, threshold: f64 },

    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("non-convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DsrnError>;

impl From<std::io::Error> for DsrnError {
    fn from(e: std::io::Error) -> Self {
        DsrnError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DsrnError {
    fn from(e: serde_json::Error) -> Self {
        DsrnError::Io(e.to_string())
    }
}

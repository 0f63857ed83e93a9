use thiserror::Error;

#[derive(Debug, Error)]
pub enum HumError {
    #[error("invalid polynomial order {0}, need at least 2")]
    InvalidOrder(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{what} = {value} outside {allowed}")]
    Domain {
        what: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eigensolver failed for order {order}: {reason}")]
    Eigen { order: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Carries the last iterate so callers can still inspect a partial answer.
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:.3e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, HumError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(HumError::Dimension { expected, got })
    }
}

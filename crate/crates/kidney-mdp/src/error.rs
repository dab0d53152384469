use thiserror::Error;

use crate::model::ValidationReport;

/// Errors produced by model construction, solvers, and analyses.
#[derive(Debug, Error)]
pub enum Error {
    /// The model violates one or more structural invariants.
    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    /// An array argument does not have the shape the operation requires.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Non-finite entries where finite values are required.
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative computation that must converge did not.
    #[error("did not converge within {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

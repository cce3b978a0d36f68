//! Error type shared across the crate, with process exit-code mapping for the CLI.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or precondition violation detected before any work ran.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Evaluation of a kernel at coincident source/observation points.
    #[error("singular kernel evaluation: {0}")]
    Singular(String),

    /// The linear system could not be factorized.
    #[error("singular system (condition estimate {condition_estimate:.3e})")]
    SingularSystem { condition_estimate: f64 },

    /// The iterative solver did not reach the requested residual.
    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// An estimator cannot run on the given sample (e.g. too few subcarriers).
    #[error("estimator not applicable: {0}")]
    EstimatorNotApplicable(String),

    /// Aligned-list operations received lists of different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// A container or CSV file violated its format.
    #[error("format error: {0}")]
    Format(String),

    /// Numeric failure at runtime (non-finite values, empty input, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 1 for validation errors, 2 for runtime/numeric errors.
    /// (0 is success and 3 is reserved for self-check failures.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

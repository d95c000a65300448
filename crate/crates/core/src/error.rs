use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by every computation in this crate.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{point} lies within {guard:e} of the spectrum (eigenvalue {eigenvalue})")]
    Singular {
        point: Complex64,
        eigenvalue: Complex64,
        guard: f64,
    },

    #[error("computation failed: {0}")]
    Computation(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("certification failure: {reason}")]
    Certification {
        reason: String,
        /// Observed (t, ‖S(t)‖) samples gathered before giving up.
        curve: Vec<(f64, f64)>,
    },

    #[error("precondition violated: {reason} (value {value})")]
    Precondition { reason: String, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

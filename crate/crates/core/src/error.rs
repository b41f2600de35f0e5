use thiserror::Error;

use crate::control::AdmissibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "grid mismatch: expected d={expected_dim} N={expected_n}, found d={found_dim} N={found_n}"
    )]
    GridMismatch {
        expected_dim: usize,
        expected_n: usize,
        found_dim: usize,
        found_n: usize,
    },

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("non-finite state at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("control synthesis failed: {}", .0.summary())]
    Synthesis(Box<AdmissibilityReport>),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("linear solver fault: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

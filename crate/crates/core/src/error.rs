use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Hilbert dimension {dim} exceeds the configured cap {cap}")]
    ResourceLimit { dim: usize, cap: usize },

    #[error("degenerate spectrum: the state has zero energy variance")]
    DegenerateSpectrum,

    #[error("window violation: {}", .0.join("; "))]
    WindowViolation(Vec<String>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("envelope inapplicable: c1 = {c1} is not below 1/2")]
    EnvelopeInapplicable { c1: f64 },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

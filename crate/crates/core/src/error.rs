use thiserror::Error;

use crate::sums::EnergyValue;

/// Errors produced by the lattice, potential, sum and optimization layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("singular basis: |det| = {det:e} below threshold {threshold:e}")]
    SingularBasis { det: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid defect spec: {0}")]
    InvalidDefectSpec(String),

    /// The enumeration or sum needed more points than allowed. For sums the
    /// best available value is attached together with its honest tail bound.
    #[error("point cap of {cap} exceeded")]
    CapExceeded {
        cap: usize,
        partial: Option<Box<EnergyValue>>,
    },

    #[error("potential has no closed-form density: {0}")]
    NoDensity(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("objective failed at (x, y) = ({x}, {y}): {reason}")]
    ObjectiveFailure { x: f64, y: f64, reason: String },

    #[error("finite-difference step too large: Richardson disagreement {disagreement:e}")]
    StepTooLarge { disagreement: f64 },

    #[error("shift condition violated: {0}")]
    ShiftConditionViolated(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A denominator or the balance determinant vanished.
    #[error("singular system: {0}")]
    Singular(String),

    /// The requested direction does not open the linkage.
    #[error("direction {zeta_deg:.3} deg does not open the links ({reason})")]
    NotOpening { zeta_deg: f64, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParameters(ValidationReport),

    /// Joint layout could not be closed within tolerance.
    #[error("joint layout does not close: {0}")]
    Layout(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("label {label} out of range for {count} distinct values")]
    LabelOutOfRange { label: usize, count: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rejection sampling failed after {attempts} consecutive attempts: {context}")]
    RejectionFailed { attempts: usize, context: String },

    #[error("identifiability repair failed after {attempts} noise injections")]
    RepairFailed { attempts: usize },

    #[error("non-finite loss at training step {step}")]
    NonFiniteLoss { step: usize },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("unknown model kind {0:?}")]
    UnknownModelKind(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error variant, used by the CLI's
    /// JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SvdNoConvergence { .. } => "svd_no_convergence",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::InsufficientData(_) => "insufficient_data",
            Error::RejectionFailed { .. } => "rejection_failed",
            Error::RepairFailed { .. } => "repair_failed",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::ConfigMismatch(_) => "config_mismatch",
            Error::UnknownModelKind(_) => "unknown_model_kind",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

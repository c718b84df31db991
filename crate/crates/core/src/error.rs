use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the reconstruction and simulation routines.
///
/// Each variant maps onto a distinct failure category so the command-line
/// front end can report (and exit with) a stable code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate medium: {0}")]
    DegenerateMedium(String),

    #[error("absorption must be positive for the diffusion Green profile (got mu_a = {mu_a}); apply an absorption floor first")]
    NeedsRegularization { mu_a: f64 },

    #[error("diffuse kernel would need {width} px per side (limit {limit})")]
    KernelTooLarge { width: usize, limit: usize },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("missing file {path}: {detail}")]
    MissingFile { path: PathBuf, detail: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short name of the failure category, used in command-line messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateMedium(_) | Error::NeedsRegularization { .. } => "degenerate-medium",
            Error::KernelTooLarge { .. } | Error::TooLarge(_) => "too-large",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::MissingFile { .. } => "missing-file",
            Error::SchemaVersion { .. } => "schema-version",
            Error::Format { .. } | Error::Json(_) => "format",
            Error::Io(_) => "io",
        }
    }

    /// Stable process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::DegenerateMedium(_) | Error::NeedsRegularization { .. } => 3,
            Error::KernelTooLarge { .. } | Error::TooLarge(_) => 4,
            Error::DimensionMismatch(_) => 5,
            Error::MissingFile { .. } => 6,
            Error::SchemaVersion { .. } => 7,
            Error::Format { .. } | Error::Json(_) => 8,
            Error::Io(_) => 9,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be finite (got {value})")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite (got {value})")))
    }
}

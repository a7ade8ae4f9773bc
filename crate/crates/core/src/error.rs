use thiserror::Error;

pub type Result<T> = std::result::Result<T, LrmarError>;

/// Errors raised by the library.
///
/// The variants fall into two classes used by the command line front end:
/// input problems (validation, dimensions, IO, formats) and numerical
/// failures during inference.
#[derive(Debug, Error)]
pub enum LrmarError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numerical error in {stage}: {detail}")]
    Numerical { stage: String, detail: String },

    #[error("selection error: {0}")]
    Selection(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LrmarError {
    pub(crate) fn numerical(stage: impl Into<String>, detail: impl Into<String>) -> Self {
        LrmarError::Numerical {
            stage: stage.into(),
            detail: detail.into(),
        }
    }

    /// True for failures of the inference numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, LrmarError::Numerical { .. })
    }

    /// Prefixes the stage of a numerical error, leaves other variants untouched.
    pub(crate) fn in_stage(self, prefix: &str) -> Self {
        match self {
            LrmarError::Numerical { stage, detail } => LrmarError::Numerical {
                stage: format!("{prefix}: {stage}"),
                detail,
            },
            other => other,
        }
    }
}

use thiserror::Error;

/// Errors raised by model construction, evaluation and training.
#[derive(Debug, Error)]
pub enum FbkanError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure in {term}: {detail}")]
    NumericalFailure { term: String, detail: String },

    #[error("coverage violation: {0}")]
    CoverageViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl FbkanError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FbkanError::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(term: impl Into<String>, detail: impl Into<String>) -> Self {
        FbkanError::NumericalFailure {
            term: term.into(),
            detail: detail.into(),
        }
    }
}

impl From<serde_json::Error> for FbkanError {
    fn from(e: serde_json::Error) -> Self {
        FbkanError::Serialization(e.to_string())
    }
}

impl From<csv::Error> for FbkanError {
    fn from(e: csv::Error) -> Self {
        FbkanError::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FbkanError>;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("ingestion error ({field}): {message}")]
    Ingestion { field: String, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("divergence at t={t} (gamma={gamma}): {reason}")]
    Divergence { t: usize, gamma: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn ingestion(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Ingestion {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

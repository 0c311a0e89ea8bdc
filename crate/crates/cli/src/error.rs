use std::fmt;

use poisonbench::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config { field: String, message: String },
    /// Exit 3.
    Divergence(String),
    /// Exit 1: a checked property failed, or something else went wrong.
    Failure(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Divergence(_) => 3,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "config error in `{field}`: {message}"),
            CliError::Divergence(m) => write!(f, "diverged: {m}"),
            CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { field, message } => CliError::Config { field, message },
            Error::Ingestion { field, message } => CliError::Config {
                field: format!("dataset.{field}"),
                message,
            },
            Error::DegeneratePartition(m) => CliError::config("partition", m),
            e @ Error::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o: {e}"))
    }
}

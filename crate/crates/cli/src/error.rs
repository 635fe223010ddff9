use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Cap(String),

    #[error("{0}")]
    CheckFailed(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Cap(_) => 3,
            CliError::CheckFailed(_) => 4,
            CliError::Io { .. } | CliError::Engine(_) => 1,
        })
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<moranrec::Error> for CliError {
    fn from(e: moranrec::Error) -> Self {
        use moranrec::Error as E;
        match e {
            E::SizeCap { .. } => CliError::Cap(e.to_string()),
            E::Io(_) => CliError::Engine(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

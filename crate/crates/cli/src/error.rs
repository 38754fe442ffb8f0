use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Degenerate(qfeedback::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<qfeedback::Error> for CliError {
    fn from(e: qfeedback::Error) -> Self {
        match e {
            qfeedback::Error::DegenerateSteadyState(_) => Self::Degenerate(e),
            other => Self::Config(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Config(_) | Self::Io(_) => ExitCode::from(2),
            Self::Degenerate(_) => ExitCode::from(3),
        }
    }
}

use std::process::ExitCode;

use thiserror::Error;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Exit code 3.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Exit code 4.
    #[error("data format error: {0}")]
    Data(String),
    /// Exit code 1: writing results failed.
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Data(_) => 4,
        })
    }

    /// Any library error raised while turning configuration into models.
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn output(e: impl std::fmt::Display) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<ionsps::Error> for CliError {
    fn from(e: ionsps::Error) -> Self {
        use ionsps::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_) | E::InvalidTransition(_) => CliError::Config(msg),
            E::Format { .. } | E::Unsorted { .. } | E::NoTriggers | E::Io(_) => CliError::Data(msg),
            E::AmbiguousSteadyState { .. }
            | E::IntegrationFailure { .. }
            | E::Domain { .. }
            | E::Quadrature { .. }
            | E::OutOfRange { .. }
            | E::Invariant(_) => CliError::Numeric(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

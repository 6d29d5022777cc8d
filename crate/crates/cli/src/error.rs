use std::process::ExitCode;

use t4d_harness::HarnessError;
use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Data(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl From<t4d_core::Error> for CliError {
    fn from(e: t4d_core::Error) -> Self {
        use t4d_core::Error as E;
        match e {
            E::Config(_) | E::UnknownStrategy(_) | E::ExemplarOverlap(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => CliError::Config(e.to_string()),
            HarnessError::Auth(_) | HarnessError::Backend(_) | HarnessError::TooManyFailures { .. } => {
                CliError::Backend(e.to_string())
            }
            HarnessError::Core(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

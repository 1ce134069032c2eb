//! Failures surfaced by the binary, each tied to an exit code.

use covertkey_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Infeasible(String),

    #[error("{0}")]
    Budget(String),

    #[error("{0}")]
    Io(String),

    #[error("replay differs from the manifest: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::ReplayMismatch(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InfeasiblePlan(_) => CliError::Infeasible(msg),
            CoreError::BudgetExceeded { .. } | CoreError::Overflow { .. } => CliError::Budget(msg),
            CoreError::InvalidChannel(_)
            | CoreError::InvalidDistribution(_)
            | CoreError::DegenerateChannel(_)
            | CoreError::AbsoluteContinuityViolation { .. }
            | CoreError::SupportMismatch { .. }
            | CoreError::Json(_) => CliError::Validation(msg),
            CoreError::Io(_) | CoreError::Csv(_) => CliError::Io(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

use mlgibbs::Error as CoreError;
use thiserror::Error;

/// Failures of a subcommand, each tied to a documented exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("diagnostic failed: {0}")]
    DiagnosticFailed(String),
    /// Exit code 2.
    #[error("{0}")]
    Config(String),
    /// Exit code 3.
    #[error("{0}")]
    Infeasible(String),
    /// Exit code 4.
    #[error("rmse {rmse} exceeds epsilon·tolerance = {limit}")]
    EpsilonAssert { rmse: f64, limit: f64 },
    /// Exit code 5.
    #[error("{0}")]
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::DiagnosticFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::EpsilonAssert { .. } => 4,
            CliError::Oracle(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) => CliError::Config(e.to_string()),
            CoreError::OracleFailure(_) => CliError::Oracle(e.to_string()),
            CoreError::InfeasibleCalibration { .. }
            | CoreError::NumericalOverflow { .. }
            | CoreError::ReplicateFailures { .. }
            | CoreError::Convergence { .. } => CliError::Infeasible(e.to_string()),
        }
    }
}

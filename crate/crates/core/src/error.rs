use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: String, iterations: u64 },

    /// A coordinate became non-finite. `level` is attached by the estimator.
    #[error("numerical overflow at step {step}{}", .level.map(|l| format!(" on level {l}")).unwrap_or_default())]
    NumericalOverflow { step: u64, level: Option<usize> },

    #[error("infeasible calibration: {quantity} = {value} ({reason})")]
    InfeasibleCalibration {
        quantity: &'static str,
        value: f64,
        reason: String,
    },

    #[error("reference oracle failed: {0}")]
    OracleFailure(String),

    #[error("{failed} of {total} replicates failed (first error: {first})")]
    ReplicateFailures {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        match self {
            Error::NumericalOverflow { step, .. } => Error::NumericalOverflow {
                step,
                level: Some(level),
            },
            other => other,
        }
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

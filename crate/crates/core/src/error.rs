use thiserror::Error;

use crate::schedule::OdePath;
use crate::smc::RunResult;

/// Errors raised by the samplers, schedule utilities and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("target and proposal coincide; the tempering path is degenerate")]
    DegeneratePair,

    #[error("all log-weights are -inf or NaN")]
    DegenerateCloud,

    #[error("empirical variance of the score is zero")]
    DegenerateScore,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("schedule ODE did not reach 1 within {} steps", .partial.lambdas.len().saturating_sub(1))]
    OdeBudgetExceeded { partial: Box<OdePath> },

    #[error("sampler stopped after {} steps at lambda = {}", .partial.n_steps, .partial.schedule_lambdas().last().copied().unwrap_or(0.0))]
    BudgetExceeded { partial: Box<RunResult> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Budget and numeric failures map to exit code 2, everything else to 1.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_)
                | Error::OdeBudgetExceeded { .. }
                | Error::BudgetExceeded { .. }
                | Error::DegenerateCloud
                | Error::DegenerateScore
                | Error::DegeneratePair
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

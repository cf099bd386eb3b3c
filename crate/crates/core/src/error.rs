use thiserror::Error;

use crate::planner::Condition;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure at step {step}: non-finite value near theta = {theta:?}")]
    NumericFailure { step: u64, theta: Vec<f64> },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    /// One or more validity conditions of a planner failed.
    #[error("infeasible plan, failed conditions: {}", failed_names(.0))]
    Infeasible(Vec<Condition>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn failed_names(conditions: &[Condition]) -> String {
    conditions
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("[{}] {}", c.theorem, c.name))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Short machine-readable label, e.g. `"unsupported-target"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NumericFailure { .. } => "numeric-failure",
            Error::ResourceLimit(_) => "resource-limit",
            Error::UnsupportedTarget(_) => "unsupported-target",
            Error::Infeasible(_) => "infeasible",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the estimators, oracles and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tree depth {depth} exceeds the supported maximum {max}")]
    DepthOverflow { depth: u32, max: u32 },

    #[error("sampling infeasible: requested a class-{class} observation but the pool is exhausted")]
    SamplingInfeasible { class: u8 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("enumeration would visit {pairs} composition pairs, above the cap of {cap}")]
    BudgetExceeded { pairs: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

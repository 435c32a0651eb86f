use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("no root of the consistency equation found: {0}")]
    NoRootFound(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

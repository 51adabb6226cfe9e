use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not a valid state: {0}")]
    NotAState(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("closed form not applicable: {0}")]
    DomainTooSmall(String),
    #[error("argument outside the function domain: {0}")]
    Domain(String),
    #[error("no feasible parameter point")]
    NoFeasiblePoint,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("search budget must be positive")]
    InvalidBudget,
    #[error("sampler exhausted: {0}")]
    Sampler(String),
}

pub type Result<T> = std::result::Result<T, Error>;

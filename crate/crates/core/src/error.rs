use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base matrix: {0}")]
    InvalidBase(String),

    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),

    #[error("design rate undefined: all {0} columns are punctured")]
    DegenerateRate(usize),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("threshold search failed: {0}")]
    NoBracket(String),

    #[error("lifting failed: {0}")]
    Lifting(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

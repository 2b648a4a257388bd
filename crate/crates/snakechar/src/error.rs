use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("inexact division: {0}")]
    InexactDivision(String),
    #[error("division by the zero character")]
    DivisionByZero,
    #[error("negative multiplicity in i-decomposition of {0}")]
    NegativeMultiplicity(String),
    #[error("not a snake: {0}")]
    NotSnake(String),
    #[error("not a prime snake: {0}")]
    NotPrime(String),
    #[error("no table row matches {0}")]
    NoRowMatches(String),
    #[error("several table rows match {0}")]
    AmbiguousRows(String),
    #[error("identity fails: {0}")]
    Mismatch(String),
    #[error("missing vertex label ({0}, {1})")]
    MissingLabel(usize, i64),
    #[error("target depends on the truncated part of the quiver: {0}")]
    TaintedTarget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_bigint::BigInt;
use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("operands lie in different quadratic fields (D = {0} vs D = {1})")]
    MixedFields(BigInt, BigInt),

    #[error("value is rational, not a quadratic irrational")]
    RationalValue,

    #[error("radicand must be a positive non-square, got {0}")]
    InvalidRadicand(BigInt),

    #[error("square-factor extraction exceeded the trial-division bound 10^6")]
    SquareFactorTooLarge,

    #[error("matrix is not Anosov: {0}")]
    NotAnosov(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

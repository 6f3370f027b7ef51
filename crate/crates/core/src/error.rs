use thiserror::Error;

use crate::model::ArmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("both arms have mean {0}; there is no unique best arm")]
    EqualMeans(f64),

    #[error("invalid truncation bounds: lo = {lo} > hi = {hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("{0} has no observations yet")]
    NoObservations(ArmId),

    #[error("round {got} recorded out of order (expected round {expected})")]
    OutOfOrder { expected: u64, got: u64 },

    #[error("standard deviations must be positive and finite (got {0}, {1})")]
    NonPositiveSigma(f64, f64),

    #[error("variance must be positive and finite (got {0})")]
    NonPositiveVariance(f64),

    #[error("invalid bandit instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown strategy `{0}` (expected one of na-aipw, na-ipw, na-sa, oracle, uniform)")]
    UnknownStrategy(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

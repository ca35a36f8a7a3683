use thiserror::Error;

use crate::metric::Site;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed value `{0}`")]
    Value(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no explicit distance between {0} and {1}")]
    MissingDistance(Site, Site),

    #[error("squared distance between {0} and {1} is not rational")]
    Inexact(Site, Site),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("invalid perturbation: {0}")]
    Perturbation(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("enumeration needs {required} subsets but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn instance(msg: impl Into<String>) -> Error {
        Error::Instance(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Error {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line, message: msg.into() }
    }
}

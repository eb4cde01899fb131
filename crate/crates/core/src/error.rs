use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Model parameters violate the admissible range.
    #[error("{0}")]
    Validation(String),
    /// The requested construction does not exist in this parameter regime.
    #[error("regime error: {0}")]
    Regime(String),
    /// A time-change inverse was requested beyond the simulated range.
    #[error("horizon exhausted: requested {requested}, reachable {reachable}")]
    HorizonExhausted { requested: f64, reachable: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

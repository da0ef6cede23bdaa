use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid disorder law: {0}")]
    InvalidLaw(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("expected {expected} children, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("no convergence after {levels} levels (last estimate {estimate:e})")]
    NotConverged { levels: usize, estimate: f64 },

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

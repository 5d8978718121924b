use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("degenerate geometry: {0}")]
    Degeneracy(String),
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by model construction, simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A rate function produced a negative or non-finite rate, or a self-loop.
    #[error("malformed model: {0}")]
    MalformedModel(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter bundle violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("competition rate c is zero; the process has no carrying capacity")]
    NoCarryingCapacity,
    #[error("at least 3 population sizes are required, got {0}")]
    InsufficientSequence(usize),
    #[error("grid contains no lattice points")]
    DegenerateGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

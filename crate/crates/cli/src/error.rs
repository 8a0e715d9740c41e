use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config or parameters: exit code 2.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// A declared tolerance was not met: exit code 3. The table is still written.
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

impl From<asg_core::Error> for CliError {
    fn from(e: asg_core::Error) -> Self {
        use asg_core::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::Domain(_)
            | E::NoCarryingCapacity
            | E::InsufficientSequence(_)
            | E::DegenerateGrid
            | E::MalformedModel(_) => CliError::Validation(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::Csv(c) => CliError::Csv(c),
        }
    }
}

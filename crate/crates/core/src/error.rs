use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("point {point_id} does not belong to the domain: {reason}")]
    DomainMismatch { point_id: usize, reason: String },
    #[error("adversary protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("no hypothesis in the class is consistent with the dataset (pipeline bug?)")]
    RealizabilityViolation,
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameters(_) => "invalid_parameters",
            Error::DomainMismatch { .. } => "domain_mismatch",
            Error::ProtocolViolation(_) => "protocol_violation",
            Error::RealizabilityViolation => "realizability_violation",
            Error::CapacityExceeded(_) => "capacity_exceeded",
            Error::Malformed(_) => "malformed",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by the core engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the physical or mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A specification (network, physics, training) failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A NaN or infinity appeared where finite arithmetic was required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A statistical operation received a degenerate sample.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A config file or persisted artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Error taxonomy shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Work or memory required exceeds a configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Value cannot be represented in the requested numeric regime.
    #[error("numeric range: {0}")]
    Range(String),
    /// Caller violated a documented precondition on state shape.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Too little data to run the requested statistical procedure.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

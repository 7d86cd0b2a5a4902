use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate register id `{0}`")]
    DuplicateRegister(String),
    #[error("unknown register id `{0}`")]
    UnknownRegister(String),
    #[error("dimension {needed} exceeds cap {cap}")]
    DimensionCap { needed: u128, cap: usize },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

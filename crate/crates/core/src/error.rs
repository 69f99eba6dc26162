use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("incompatible operands: base {0} vs base {1}")]
    IncompatibleOperands(u32, u32),
    #[error("digit extraction requires a nonnegative value")]
    NegativeValue,
    #[error("base {base} too small: alphabet would have {alphabet} symbols, need at least 2")]
    BaseTooSmall { base: u32, alphabet: u64 },
}

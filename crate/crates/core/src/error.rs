use alloc::string::String;

/// Errors produced by the core operations.
///
/// Variants fall into four families: structural (shapes and ownership do
/// not line up), argument (a scalar parameter out of its domain), capacity
/// (an input exceeds a guarded size), and capability (a requested
/// combination is not supported).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("subset does not belong to the space it is used with")]
    ParentMismatch,
    #[error("index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument {name} = {value}: {reason}")]
    InvalidArgument { name: &'static str, value: f64, reason: &'static str },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("total masses differ: {a} vs {b}")]
    MassMismatch { a: f64, b: f64 },
    #[error("capacity exceeded for {what}: {found} > {limit}")]
    Capacity { what: &'static str, limit: usize, found: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_arg(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument { name, value, reason })
    }
}

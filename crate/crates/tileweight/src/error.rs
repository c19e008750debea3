use alloc::string::String;
use core::fmt;

/// Error type shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A structural requirement on the inputs is violated (divisibility,
    /// id range, shape mismatch, non-positive value, ...).
    Domain(String),
    /// The requested computation is well-posed but exceeds a configured
    /// budget; the message carries the estimate that triggered the refusal.
    Budget(String),
    /// A theorem-backed invariant failed at runtime. Always a bug, never a
    /// tolerance issue.
    Invariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Budget(msg) => write!(f, "budget exceeded: {msg}"),
            Error::Invariant(msg) => write!(f, "invariant violation: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

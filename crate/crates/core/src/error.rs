//! Error type shared across the solver library and the harness.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Failure inside a problem oracle (for example the embedded recourse
    /// solver not converging). The driver prepends iteration context.
    #[error("oracle failure: {0}")]
    Oracle(String),

    /// The B2 rule received a non-finite gap at the cycle start, so no finite
    /// cycle length satisfies it.
    #[error("cycle rule produced an unbounded cycle: gap at cycle start is not finite")]
    UnboundedCycle,

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration file or parameter set.
    #[error("config error: {0}")]
    Config(String),

    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The LP solver hit a numerical breakdown or an ill-posed input.
    #[error("lp error: {0}")]
    Lp(String),

    /// An iterative solver failed to reach its contract.
    #[error("solver error: {0}")]
    Solver(String),

    /// Refused because the instance exceeds a configured size guard.
    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its admissible range, or the requested
    /// parameter combination breaks an internal scale separation (e.g. the
    /// critical layer is not strictly inside the series zone).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A linear system or series inversion is too ill-conditioned to trust.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// A function representation cannot absorb the requested operation
    /// (e.g. a product would need stronger singular terms than the basis has).
    #[error("representation overflow: {0}")]
    ReprOverflow(String),

    /// Two representations are incompatible (different centers, grids, ...).
    #[error("incompatible representations: {0}")]
    Incompatible(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn no_convergence(msg: impl Into<String>) -> Self {
        Error::NoConvergence(msg.into())
    }
    pub fn ill_conditioned(msg: impl Into<String>) -> Self {
        Error::IllConditioned(msg.into())
    }
    pub fn repr_overflow(msg: impl Into<String>) -> Self {
        Error::ReprOverflow(msg.into())
    }
    pub fn incompatible(msg: impl Into<String>) -> Self {
        Error::Incompatible(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

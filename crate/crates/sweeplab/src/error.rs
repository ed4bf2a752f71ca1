//! Library-wide error type.

use thiserror::Error;

/// Shorthand for results carrying [`Error`].
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
///
/// I/O never happens here (the CLI owns files), so the variants are limited
/// to bad inputs and internal consistency violations.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented bound, e.g. `s` outside `(0, 1)`.
    #[error("domain error: {0}")]
    Domain(String),

    /// Recorded simulation data failed an internal consistency check while
    /// being replayed (corrupt trajectory, inconsistent allele counts, ...).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Statistics were requested from an empty collection.
    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl Error {
    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Convenience constructor for [`Error::Integrity`].
    pub fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }
}

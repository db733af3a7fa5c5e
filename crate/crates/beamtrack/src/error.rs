//! Crate-wide error type and its process exit-code mapping.

use thiserror::Error;

/// Errors surfaced by the library and the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad flag value, inconsistent parameters, or a
    /// malformed config file.
    #[error("configuration error: {0}")]
    Config(String),

    /// Geometry that cannot be evaluated (e.g. a user on top of the array).
    #[error("degenerate geometry: {0}")]
    Geometry(String),

    /// I/O failure while reading a config or writing results.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI: configuration problems map to 2, anything that
    /// failed at runtime to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

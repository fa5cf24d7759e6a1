use thiserror::Error;

/// Error taxonomy shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the mathematical domain was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data itself is inconsistent (duplicates, empty results, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A line of an input file could not be interpreted.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A numerical routine failed (singular system, non-finite value).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The run configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

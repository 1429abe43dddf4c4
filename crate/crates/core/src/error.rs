use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numeric input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario or parameter set violates a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Exhaustive enumeration would exceed the configured evaluation budget.
    #[error("enumeration of {required} activations exceeds budget {budget}")]
    Budget { required: u128, budget: u64 },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            Error::Io { .. } => 4,
            Error::Usage(_) | Error::Domain(_) | Error::Validation(_) | Error::Parse { .. } => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

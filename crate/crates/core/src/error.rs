use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A config document failed to parse or validate.
    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        key: String,
        line: usize,
        message: String,
    },

    /// A first-passage run hit its step budget before the trigger fired.
    #[error("run {run_index} did not trigger within {max_steps} steps; increase max_steps")]
    Truncated { run_index: u64, max_steps: u64 },

    #[error("sweep cell n={n}, p={p} failed: {source}")]
    Cell {
        n: usize,
        p: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed result data: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime abort, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config { .. } | Error::Format(_) => 1,
            Error::Truncated { .. } => 2,
            Error::Io { .. } => 3,
            Error::Cell { source, .. } => source.exit_code(),
        }
    }
}

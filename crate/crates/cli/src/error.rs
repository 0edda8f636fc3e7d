use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("digest mismatch for {path}: manifest has {expected}, file has {found}")]
    Digest {
        path: PathBuf,
        expected: String,
        found: String,
    },

    /// The solver hit its iteration cap; partial outputs were written.
    #[error("solver did not converge within {iterations} iterations (partial outputs written)")]
    NotConverged { iterations: usize },

    /// Some experiment jobs failed; the summary covers the rest.
    #[error("{} job(s) failed on matrices {failed:?}", failed.len())]
    PartialFailure { failed: Vec<usize> },

    #[error(transparent)]
    Core(#[from] netbaseline::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 configuration, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig(_) => 2,
            CliError::Core(netbaseline::Error::InvalidConfig(_)) => 2,
            CliError::Io { .. } | CliError::Format { .. } | CliError::Digest { .. } => 4,
            CliError::NotConverged { .. } | CliError::PartialFailure { .. } | CliError::Core(_) => {
                3
            }
        }
    }
}

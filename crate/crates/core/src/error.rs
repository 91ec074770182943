use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator, library or harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid vertex id {id} (grid has {count} vertices)")]
    InvalidVertex { id: usize, count: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("episode did not terminate within {0} ticks")]
    TickBudgetExceeded(u64),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short category tag used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_)
            | Error::InvalidVertex { .. }
            | Error::InvalidPath(_)
            | Error::DimensionMismatch { .. } => "input",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
            Error::TickBudgetExceeded(_) => "simulation",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

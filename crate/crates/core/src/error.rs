use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("node {node} is used both as an article and as a category")]
    ClassificationConflict { node: String },

    #[error("invalid node id {0:?}: must be non-empty and contain no whitespace")]
    InvalidNodeId(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("index format version {found} is not supported (expected {expected})")]
    IndexVersion { found: u32, expected: u32 },

    #[error("not a valid graph index: {0}")]
    Index(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot merge profiles of different users ({left} vs {right})")]
    UserMismatch { left: String, right: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("annotation service unreachable after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("annotation service returned an unusable response: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::IndexVersion { .. } | Error::Index(_) => 3,
            Error::Transport { .. } | Error::Protocol(_) => 4,
            _ => 1,
        }
    }
}

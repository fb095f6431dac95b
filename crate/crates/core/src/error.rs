use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("block {block}, tx {tx}: {reason}")]
    Validation {
        block: u64,
        tx: String,
        reason: String,
    },

    #[error("block numbers must be strictly increasing: {prev} then {next}")]
    BlockOrder { prev: u64, next: u64 },

    #[error("tx {tx}: {reason}")]
    Convert { tx: String, reason: String },

    #[error("block {block}: {source}")]
    InBlock {
        block: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn at_path(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

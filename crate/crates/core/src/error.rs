use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("{table}: malformed row at line {line}: {reason}")]
    MalformedRow {
        table: String,
        line: u64,
        reason: String,
    },

    #[error("{table}: line {line} references unknown {key_kind} '{key}'")]
    DanglingKey {
        table: String,
        line: u64,
        key_kind: &'static str,
        key: String,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 2 config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::MissingFile { .. } => 2,
            Error::DataIntegrity(_)
            | Error::MalformedRow { .. }
            | Error::DanglingKey { .. }
            | Error::Degenerate(_)
            | Error::Csv(_) => 3,
            Error::Contract(_) | Error::Io { .. } | Error::Json(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

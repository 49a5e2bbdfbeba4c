use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be even and at least 4, got {0}")]
    InvalidGrid(usize),
    #[error("grid mismatch: expected N={expected}, got N={found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("norm undefined in log space: field is identically zero")]
    ZeroField,
    #[error("non-finite coefficient detected at step {step} (t = {t})")]
    BlowUp { step: u64, t: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: line {line}: {msg}")]
    ConfigLine { path: PathBuf, line: usize, msg: String },
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("{path}: row {row}: {msg}")]
    Csv { path: PathBuf, row: usize, msg: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: length {len} but at least {required} timestamps are required")]
    SeriesTooShort { len: usize, required: usize },

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("malformed filtration: {0}")]
    MalformedFiltration(String),

    #[error("zero-norm vector in cosine similarity ({which} row {row})")]
    ZeroNorm { which: &'static str, row: usize },

    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss { epoch: usize, step: usize, detail: String },

    #[error("parse error in {path} at line {line}, column {column}: {msg}")]
    Parse { path: PathBuf, line: usize, column: usize, msg: String },

    #[error("empty data file: {0}")]
    EmptyFile(PathBuf),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("training set has a single class; a classifier cannot be fit")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint does not match configuration: {0}")]
    CheckpointMismatch(String),

    #[error("corrupt cache {path}: {msg}")]
    CorruptCache { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Broad failure classes, used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::CheckpointMismatch(_) | Error::Json(_) => ErrorKind::Config,
            Error::ZeroNorm { .. } | Error::NonFiniteLoss { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

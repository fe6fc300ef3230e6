use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate summary key (doc_id={doc_id}, system_id={system_id})")]
    DuplicateSummary { doc_id: String, system_id: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("fixture item {id}: {message}")]
    Fixture { id: String, message: String },

    #[error("fixture has no item for text {0:?}")]
    FixtureMiss(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("unsupported by backend {backend}: {what}")]
    Unsupported { backend: String, what: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("missing idf weights on {0} sequence")]
    MissingIdf(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric {metric} failed on (doc_id={doc_id}, system_id={system_id}): {source}")]
    Pair {
        metric: String,
        doc_id: String,
        system_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("document {doc_id}: {source}")]
    Document {
        doc_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn model(msg: impl std::fmt::Display) -> Self {
        Error::Model(msg.to_string())
    }
}

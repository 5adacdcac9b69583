use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    #[error("unknown document id {0}")]
    UnknownDocument(u64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("vocabulary mismatch: {unknown} of {total} corpus tokens ({rate:.2}%) are unknown to the model")]
    VocabularyMismatch {
        unknown: usize,
        total: usize,
        rate: f64,
    },

    #[error("question {0}: no gold document")]
    MissingGold(u64),

    #[error("question {0}: no ranking")]
    MissingRanking(u64),

    #[error("pair {id}: {source}")]
    Pair {
        id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

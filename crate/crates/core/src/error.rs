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

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    Dimension {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("no sentence embedding for tweet id `{0}`")]
    MissingEmbedding(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("layout fingerprint mismatch: model expects {expected}, input has {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("model file: {message} (byte offset {offset})")]
    ModelFormat { message: String, offset: usize },

    #[error("model file version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("model file holds a `{found}` model, expected `{expected}`")]
    EngineType { expected: String, found: String },

    #[error("dataset has no labels")]
    Unlabeled,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

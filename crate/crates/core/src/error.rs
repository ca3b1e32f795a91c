use std::path::PathBuf;

use thiserror::Error;

use crate::models::TrainHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("record {id}: invalid residue '{ch}'")]
    InvalidResidue { id: usize, ch: char },

    #[error("record {id}: sequence length {len} outside 1..=200")]
    InvalidLength { id: usize, len: usize },

    #[error("dataset {0} is empty")]
    EmptyDataset(String),

    #[error("sequence of length {len} is too short for token length {k}")]
    SequenceTooShort { len: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary is empty (no token reaches min_count {min_count})")]
    EmptyVocabulary { min_count: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch} (last finite epoch {last_finite_epoch:?})")]
    Diverged {
        epoch: usize,
        last_finite_epoch: Option<usize>,
        history: Box<TrainHistory>,
    },

    #[error("scores contain a single class; both classes are required")]
    SingleClass,

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("unsupported format version {found} (this build reads up to {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error("no valid records in {path} ({skipped} skipped)")]
    NoValidRecords { path: PathBuf, skipped: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed token `{0}` is not in the vocabulary")]
    SeedNotInVocabulary(String),
    #[error("bucket mismatch between predictions and gold: {0}")]
    BucketMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two words to score coherence, got {0}")]
    TooFewWords(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use crate::types::Domain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("domain mismatch: expected {expected}, got {actual}")]
    DomainMismatch { expected: Domain, actual: Domain },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing predictions for test samples: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

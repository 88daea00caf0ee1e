use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the dense-descriptor pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("no foreground found in image")]
    NoForeground,
    #[error("plain mask does not overlap the rolled print foreground")]
    EmptyOverlap,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("descriptor format error: {0}")]
    Format(String),
    #[error("duplicate gallery id `{0}`")]
    DuplicateId(String),
    #[error("score set is empty")]
    EmptyScores,
    #[error("label error: {0}")]
    Label(String),
    #[error("pose missing for `{0}`")]
    PoseMissing(String),
    #[error("protocol error: missing descriptors for {}", .0.join(", "))]
    Protocol(Vec<String>),
    #[error("config error: {0}")]
    Config(String),
    #[error("image decode error for {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

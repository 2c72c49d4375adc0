//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest parse error at line {line}: {msg}")]
    ManifestParse { line: usize, msg: String },

    #[error("audio decode error for {path}: {msg}")]
    AudioDecode { path: PathBuf, msg: String },

    #[error("expected mono audio, got {channels} channels in {path}")]
    MultiChannel { path: PathBuf, channels: u16 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("configuration validation failed for fields: {}", .0.join(", "))]
    ConfigFields(Vec<String>),

    #[error("checkpoint error for {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    InvalidInput(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("no teacher checkpoints given; train one with stage2 first")]
    NoTeachers,

    #[error("unknown model plugin '{0}'")]
    UnknownPlugin(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

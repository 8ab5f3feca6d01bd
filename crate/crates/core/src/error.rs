use std::path::PathBuf;

/// Errors produced by the butterfly library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The low-rank bound requires `gamma < 1`.
    #[error("low-rank bound inapplicable: gamma = {gamma} >= 1")]
    BoundInapplicable { gamma: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

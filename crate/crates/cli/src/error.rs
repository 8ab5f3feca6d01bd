use std::path::{Path, PathBuf};

/// Exit status for each failure class.
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bfnet_core::Error),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("refused: {0}")]
    Resource(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use bfnet_core::Error as E;
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Resource(_) | CliError::Core(E::Resource(_)) => EXIT_RESOURCE,
            CliError::Io { .. } | CliError::Core(E::Io { .. }) => EXIT_IO,
            CliError::Core(_) => EXIT_INVALID,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] redcut_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed input data, with a location in the message.
    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Config(String),

    #[error("similarity cache: {0}")]
    Cache(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration errors, 3 for data errors,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use redcut_core::Error as E;
        match self {
            Error::Config(_) => 2,
            Error::Core(E::InvalidParameter { .. } | E::SurvivorCap { .. }) => 2,
            Error::Core(E::NotConverged { .. } | E::NotSymmetric(_)) => 4,
            Error::Core(_) | Error::Io { .. } | Error::Parse(_) | Error::Cache(_) => 3,
        }
    }
}

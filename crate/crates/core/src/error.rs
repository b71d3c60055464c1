use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("observation window is empty")]
    EmptyWindow,

    #[error("covariance matrix is not positive definite (noise below floor?)")]
    SingularCovariance,

    #[error("candidate set is empty")]
    EmptyCandidateSet,

    #[error("no records to aggregate")]
    EmptyRecords,

    #[error("unknown dataset tag `{0}`")]
    UnknownDataset(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownSweepParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::UnknownDataset(_)
                | Error::UnknownSweepParameter(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

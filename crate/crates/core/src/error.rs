use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("signal too short: {len} samples, filtering requires more than {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("non-finite value at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("model format version mismatch: file has {found}, expected {expected}")]
    VersionMismatch { found: String, expected: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure during computation.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidInterval(_)
            | Error::InvalidWindow(_)
            | Error::InvalidConfig { .. }
            | Error::OutOfRange(_)
            | Error::Malformed { .. }
            | Error::VersionMismatch { .. }
            | Error::InvalidData(_)
            | Error::DimensionMismatch(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::SignalTooShort { .. } | Error::InsufficientData(_) | Error::NonFinite { .. } => {
                false
            }
        }
    }
}

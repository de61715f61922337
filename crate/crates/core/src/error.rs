use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DseError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("sample error: {0}")]
    Sample(String),
    #[error("cluster error: {0}")]
    Cluster(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("series error: {0}")]
    Series(String),
    #[error("length mismatch: {0}")]
    Length(String),
}

impl DseError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DseError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message with the checkpoint it came from.
    pub fn with_source_id(self, source_id: &str) -> Self {
        match self {
            DseError::Format(m) => DseError::Format(format!("{source_id}: {m}")),
            DseError::Data(m) => DseError::Data(format!("{source_id}: {m}")),
            DseError::Sample(m) => DseError::Sample(format!("{source_id}: {m}")),
            DseError::Cluster(m) => DseError::Cluster(format!("{source_id}: {m}")),
            DseError::Dimension(m) => DseError::Dimension(format!("{source_id}: {m}")),
            DseError::Config(m) => DseError::Config(format!("{source_id}: {m}")),
            DseError::Series(m) => DseError::Series(format!("{source_id}: {m}")),
            DseError::Length(m) => DseError::Length(format!("{source_id}: {m}")),
            io @ DseError::Io { .. } => io,
        }
    }
}

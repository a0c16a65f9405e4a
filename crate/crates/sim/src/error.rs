use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] stcsf_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: byte {offset}: {message}")]
    Format { path: PathBuf, offset: u64, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("sweep point {axis} = {value}: {source}")]
    SweepPoint {
        axis: String,
        value: f64,
        #[source]
        source: Box<SimError>,
    },
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, message: impl Into<String>) -> Self {
        SimError::Format { path: path.into(), offset, message: message.into() }
    }
}

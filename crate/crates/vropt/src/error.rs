use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = VroptError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VroptError {
    #[error(transparent)]
    Core(#[from] vropt_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dataset `{name}` not found (looked in {})", dir.display())]
    DatasetNotFound { name: String, dir: PathBuf },

    #[error("csv: {0}")]
    Csv(String),
}

impl VroptError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VroptError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for divergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            VroptError::Core(vropt_core::Error::Divergence { .. }) => 2,
            _ => 1,
        }
    }
}

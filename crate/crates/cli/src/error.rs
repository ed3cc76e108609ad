use std::path::Path;

use thiserror::Error;

/// Command failure, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Prefixes a format error with the offending file.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            Self::Format(msg) => Self::Format(format!("{}: {msg}", path.display())),
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 1,
            Self::Format(_) | Self::Io { .. } => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<tubal_core::Error> for CliError {
    fn from(e: tubal_core::Error) -> Self {
        use tubal_core::Error as E;
        match e {
            E::Config(_) => Self::Config(e.to_string()),
            E::InvalidInput(_) | E::Shape { .. } => Self::Format(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

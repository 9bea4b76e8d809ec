use std::path::{Path, PathBuf};

use protpat_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", location(path, *line))]
    Format {
        path: PathBuf,
        /// 1-based; 0 when the problem concerns the whole file.
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Degenerate(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn location(path: &Path, line: u64) -> String {
    if line == 0 {
        path.display().to_string()
    } else {
        format!("{}:{line}", path.display())
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), line, message: message.into() }
    }

    /// 2 for IO and malformed files, 3 for empty or degenerate data, 4 for
    /// calibration failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Format { .. } => 2,
            CliError::Degenerate(_) => 3,
            CliError::Calibration(_) => 4,
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                CoreError::EmptyInput(_) | CoreError::InsufficientData(_) | CoreError::NoFiniteMle => 3,
                CoreError::UnreachableTarget { .. } => 4,
                _ => 1,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::path::{Path, PathBuf};

use ddkit_core::ErrorKind;

/// Exit codes of the command-line tool.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ddkit_core::Error),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{source}\n{estimate}")]
    Refused {
        source: ddkit_core::Error,
        estimate: String,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Resource => EXIT_RESOURCE,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            },
            CliError::Refused { .. } => EXIT_RESOURCE,
            CliError::Validation(_) | CliError::Format { .. } => EXIT_VALIDATION,
            CliError::Io { .. } | CliError::Csv(_) => EXIT_IO,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

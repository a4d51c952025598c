use std::path::{Path, PathBuf};

use hoisynth::Error;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn in_file(path: &Path, source: impl Into<Error>) -> Self {
        CliError::InFile {
            path: path.to_path_buf(),
            source: source.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Io { .. } => return 5,
            CliError::Core(e) | CliError::InFile { source: e, .. } => e,
        };
        match core {
            Error::Parse(_) => 2,
            e if e.is_numerical() => 4,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::io;
use std::path::Path;

use curvebump::ErrorKind;

/// Failures mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Resource(_) => 4,
        }
    }

    pub fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: io::Error) -> Self {
        CliError::Usage(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<curvebump::Error> for CliError {
    fn from(e: curvebump::Error) -> Self {
        let msg = e.to_string();
        match e.kind() {
            ErrorKind::Usage => CliError::Usage(msg),
            ErrorKind::Data => CliError::Data(msg),
            ErrorKind::Resource => CliError::Resource(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

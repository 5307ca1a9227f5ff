use std::path::{Path, PathBuf};

use dyadic_core::ErrorClass;
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] dyadic_core::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => EXIT_USAGE,
                ErrorClass::Hypothesis => EXIT_HYPOTHESIS,
                ErrorClass::Numerical => EXIT_NUMERICAL,
                ErrorClass::Io => EXIT_IO,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

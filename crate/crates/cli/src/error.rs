use std::fmt;
use std::path::{Path, PathBuf};

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { path: PathBuf, msg: String },
    Compute(gasket_core::Error),
    Verify(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), msg: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Compute(_) => 1,
            CliError::Verify(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io { path, msg } => write!(f, "{}: {msg}", path.display()),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<gasket_core::Error> for CliError {
    fn from(e: gasket_core::Error) -> Self {
        match e {
            gasket_core::Error::Argument(m) => CliError::Config(m),
            e => CliError::Compute(e),
        }
    }
}

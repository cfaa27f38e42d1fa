use thiserror::Error;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command-line usage (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Invalid input data, manifest or configuration (exit 2).
    #[error("{0}")]
    Input(String),
    /// Failure while running: I/O on outputs, bind errors (exit 3).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<vulnrank_core::Error> for CliError {
    fn from(e: vulnrank_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

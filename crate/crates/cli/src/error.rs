use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config value `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("experiment `{experiment}` needs {requirement}")]
    Unsupported { experiment: String, requirement: String },
    #[error(transparent)]
    Core(#[from] specband::Error),
}

impl CliError {
    /// Process exit code: 2 for usage, config and I/O problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}

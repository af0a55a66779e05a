use std::path::PathBuf;

use thiserror::Error;

/// Exit statuses: 0 success, 2 configuration or usage, 3 output, 4 engine
/// or ensemble failure, 5 a `--check` tolerance violated.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run failed: {0}")]
    Run(#[from] beable_core::Error),

    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output { .. } => 3,
            CliError::Run(_) => 4,
            CliError::Check(_) => 5,
        }
    }
}

use thiserror::Error;

/// CLI failures, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input paths: exit 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while computing: exit 1.
    #[error(transparent)]
    Compute(#[from] uclso::Error),
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Write { .. } => 1,
        }
    }
}

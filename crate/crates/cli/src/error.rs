use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] jetlag_core::Error),
}

impl CliError {
    /// Process exit status: 64 for anything the caller got wrong, 1 for
    /// numerical or I/O failures on a valid request.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Read { .. } => 64,
            CliError::Write { .. } | CliError::Core(_) => 1,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] riskeq_core::Error),
}

impl CliError {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } => 2,
            CliError::Solver(e) if e.is_non_convergence() => 3,
            _ => 1,
        }
    }
}

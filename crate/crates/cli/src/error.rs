use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ifpc_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage { stage: &'static str, source: Box<CliError> },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            s @ Self::Stage { .. } => s,
            e => Self::Stage { stage, source: Box::new(e) },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

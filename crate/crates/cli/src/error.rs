use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown axis {0:?}; expected one of dataset, model, method, beta, seed")]
    UnknownAxis(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: malformed report: {message}")]
    Report { path: String, message: String },
    #[error(transparent)]
    Core(#[from] labelshift::Error),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

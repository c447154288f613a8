use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] subgrad_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

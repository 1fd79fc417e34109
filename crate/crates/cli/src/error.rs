use chiral_potts::ChainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(clap::Error),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Chain(#[from] ChainError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    /// 2 usage, 3 dimension budget, 1 anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Chain(ChainError::DimensionBudget { .. }) => 3,
            CliError::Chain(ChainError::InvalidParams(_)) => 2,
            _ => 1,
        }
    }
}

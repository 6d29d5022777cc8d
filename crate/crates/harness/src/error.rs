use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("backend error: {0}")]
    Backend(String),

    #[error("authentication failed: {0}")]
    Auth(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no records to score")]
    EmptyInput,

    #[error("{failed} of {total} cells failed, above the {threshold:.0}% threshold")]
    TooManyFailures { failed: usize, total: usize, threshold: f64 },

    #[error(transparent)]
    Core(#[from] t4d_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GdtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch} (restart {restart}): non-finite loss")]
    Diverged { restart: usize, epoch: usize },

    #[error("class {class} has {count} training sample(s); SMOTE needs at least 2")]
    InsufficientMinority { class: usize, count: usize },

    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    Schema { missing: Vec<String>, extra: Vec<String> },

    #[error("{path}: {message}")]
    Data { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GdtError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GdtError::InvalidArgument(msg.into()))
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("n-gram order {0} outside 1..=4")]
    InvalidOrder(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("at least one reference is required")]
    MissingReference,

    #[error("model not ready: {0}")]
    ModelNotReady(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Neural(#[from] neural::NeuralError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] spdnn::Error),

    #[error("tuning failed: all {cells} grid cells diverged")]
    Tuning { cells: usize },

    #[error("ingestion error at row {row}: {msg}")]
    Ingestion { row: usize, msg: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("relative error undefined: actual value {value} at index {index} is not positive")]
    RelativeUndefined { index: usize, value: f64 },

    #[error("config file line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

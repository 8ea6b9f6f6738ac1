use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration, rejected before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    /// Dimension or layout mismatch between values that must agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A CSV cell or row could not be ingested; locations are 1-based.
    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: usize,
        message: String,
    },

    /// A gradient with zero norm where an angle is required.
    #[error("degenerate gradient: {0}")]
    DegenerateGradient(String),

    /// A metric that has no defined value for the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

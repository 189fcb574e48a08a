//! Error type shared across the crate.

use crate::corpus::Label;

/// Errors produced by corpus loading, feature extraction, training and
/// evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration (missing column, unparsable option).
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad data content, with the 1-based file line it came from.
    #[error("data error at line {line}: {message}")]
    Data { line: u64, message: String },

    /// Malformed CSV; the underlying error carries the position.
    #[error("CSV parse error: {0}")]
    Csv(#[from] csv::Error),

    /// A class is too small to spread over the requested fold count.
    #[error("stratification error: class {label} has {count} instances, fewer than k = {k}")]
    Stratification {
        label: Label,
        count: usize,
        k: usize,
    },

    /// Invalid argument to an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Training cannot proceed (e.g. single-class training set).
    #[error("training error: {0}")]
    Training(String),

    /// Non-finite values where finite math is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Mismatched dimensions between a vector, model or vocabulary.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Serialized model/vocabulary/report that does not match the schema.
    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

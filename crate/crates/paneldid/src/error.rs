//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input data or configuration; the message names the offending
    /// column, unit, or parameter.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Input file does not conform to the panel CSV schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// An estimator could not produce estimates from otherwise valid input.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Iterative routine did not converge.
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    /// Model parameter outside the region where the closed forms are valid.
    #[error("beta = {beta} is outside the validity region [0, {threshold}]")]
    OutOfRegion { beta: f64, threshold: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

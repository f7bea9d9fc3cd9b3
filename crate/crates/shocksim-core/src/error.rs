use thiserror::Error;

/// Errors surfaced by simulation and verification operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A handle or configuration is missing something an operation requires
    /// (no decay certificate, mismatched spaces, unshared noise streams, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An input violates an operation's precondition (unsorted samples,
    /// negative values, non-mean-zero state, ...).
    #[error("input error: {0}")]
    Input(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    /// Cross-checked estimators disagree beyond their joint confidence
    /// interval; the configuration likely violates the model assumptions.
    #[error("ergodicity diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

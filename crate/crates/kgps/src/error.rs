//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KgError {
    /// A precondition on exponents or dimensions was violated.
    #[error("exponent error: {0}")]
    Exponent(String),

    /// A grid or field failed validation (odd sizes, shape mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration file problems: unknown keys, type errors, missing keys.
    #[error("config error: {0}")]
    Config(String),

    /// The requested final time exceeds the finite-speed validity horizon.
    #[error("horizon refused: {0}")]
    HorizonRefused(String),

    /// Non-finite values encountered mid-run.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Snapshot file malformed (bad magic, truncated, wrong version).
    #[error("snapshot format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, KgError>;

use thiserror::Error;

/// Errors shared by all exact-arithmetic operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A root-datum label outside the supported list (A1, A2, B2).
    #[error("unsupported type label: {0}")]
    UnsupportedType(String),

    /// Inputs belong to different root data / posets / fields.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// An input violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation would leave the declared truncation window.
    #[error("truncation bound exceeded: {0}")]
    TruncationBound(String),

    /// An operation is outside the supported range (e.g. unsupported twist).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An internal invariant failed; signals a bug, not a math failure.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

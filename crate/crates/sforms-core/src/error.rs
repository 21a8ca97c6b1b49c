//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by exact computations. Every variant is a *typed* outcome:
/// callers can distinguish precondition violations from budget exhaustion and
/// from genuinely unrepresentable requests.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// A claimed prime is not prime, or a place string is malformed.
    #[error("invalid place: {0}")]
    InvalidPlace(String),

    /// An input that must be nonzero/nondegenerate is zero or singular.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Matrix/vector/form dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A documented precondition of the operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation's search budget was exhausted before a decision.
    #[error("budget exhausted: {0}")]
    Budget(String),

    /// The requested invariant combination is not realizable (binary and
    /// unary forms do not realize every (disc, ε) pair).
    #[error("not representable: {0}")]
    NotRepresentable(String),

    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A floating-point-assisted path could not be certified within
    /// tolerance; exact alternatives (when any) are reported alongside.
    #[error("approximation failure: {0}")]
    Approximation(String),

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),

    /// An internal consistency check failed; indicates a bug, never bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

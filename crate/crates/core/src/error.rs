use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An intermediate left the representable integer range.
    #[error("arithmetic range exceeded in {0}")]
    ArithmeticRange(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid discriminant {d}: {reason}")]
    InvalidDiscriminant { d: i128, reason: &'static str },

    #[error("parity precondition violated for [{a},{b},{c}]: {reason}")]
    Parity {
        a: i64,
        b: i64,
        c: i64,
        reason: &'static str,
    },

    /// A result failed its own exact re-verification. Always a bug.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

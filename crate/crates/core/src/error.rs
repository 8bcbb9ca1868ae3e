use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Variants are grouped by how callers are expected to react: `Parse`,
/// `UnknownGenerator`, and `InvalidInput` indicate bad user input;
/// `LimitExceeded` is the coset-enumeration budget; `Inapplicable` means a
/// construction's hypothesis genuinely fails on this input (not a bug);
/// `TooLarge` marks exact searches refused above their ceiling; `Internal`
/// flags a violated invariant and is always a bug.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown generator '{name}' at line {line}, column {col}")]
    UnknownGenerator { name: String, line: usize, col: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index not determined within limit of {limit} cosets")]
    LimitExceeded { limit: usize },

    #[error("homomorphism invalid: {0}")]
    InvalidHomomorphism(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("graph too large for exact search: {vertices} vertices exceeds ceiling {ceiling}")]
    TooLarge { vertices: usize, ceiling: usize },

    #[error("certificate rejected: {0}")]
    CertificateRejected(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::UnknownGenerator { .. } => 2,
            Error::InvalidInput(_) => 2,
            Error::LimitExceeded { .. } => 3,
            Error::InvalidHomomorphism(_) => 4,
            Error::Inapplicable(_) => 10,
            _ => 1,
        }
    }
}

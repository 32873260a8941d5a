use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate assignment: every unit is in the same arm")]
    DegenerateAssignment,

    #[error("category count mismatch: {left} vs {right}")]
    CategoryMismatch { left: usize, right: usize },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("unit {unit}: empty truncation interval ({lower}, {upper})")]
    EmptyInterval { unit: usize, lower: f64, upper: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the command-line front end: 2 for configuration
    /// problems, 3 for data problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::LengthMismatch { .. }
            | Error::DegenerateAssignment
            | Error::CategoryMismatch { .. }
            | Error::Io(_) => 3,
            Error::Undefined(_) | Error::EmptyInterval { .. } | Error::Numerical(_) => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

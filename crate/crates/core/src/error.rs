use thiserror::Error;

/// Errors raised by the prioritization engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A score or ranking value is unusable (non-finite, out of range, empty input).
    #[error("invalid input at index {index}: {reason}")]
    InvalidInput { index: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Zero variance in a ranking vector makes a correlation undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ranks with ties are not supported by {0}")]
    UnsupportedTies(&'static str),

    /// Malformed catalog source. `line` is 1-based, `field` names the column or JSON path.
    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("problem size {n} exceeds the exhaustive search limit of {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    /// True for errors caused by user-supplied data rather than internal state.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Contract(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

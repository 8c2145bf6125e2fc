use thiserror::Error;

/// Errors raised by the estimation, testing and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LrvError {
    /// Invalid input shape or content (non-finite entries, too few rows, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter combination that cannot be honoured (block length, B, bandwidth, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An autocovariance lag outside `|k| <= T - 1`.
    #[error("lag {lag} out of range for sample size {t}")]
    LagOutOfRange { lag: i64, t: usize },

    /// A non-finite intermediate value. `lag` and `block` locate it when known.
    #[error("non-finite value at lag {lag:?}, block {block:?}: {what}")]
    NonFinite {
        what: String,
        lag: Option<i64>,
        block: Option<usize>,
    },

    /// The regressor matrix is (numerically) rank deficient.
    #[error("regressor matrix is rank deficient (condition number {0:e})")]
    RankDeficient(f64),

    /// A variance that must be strictly positive is not.
    #[error("non-positive variance {0:e}")]
    NonPositiveVariance(f64),

    /// Replication failures above the tolerated share.
    #[error("cell {cell}: {failed} of {reps} replications failed (first: {first})")]
    TooManyFailures {
        cell: String,
        failed: usize,
        reps: usize,
        first: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl LrvError {
    /// Configuration problems map to exit code 2, numeric ones to 3.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            LrvError::Config(_) | LrvError::InvalidInput(_) | LrvError::Io(_)
        )
    }
}

impl From<std::io::Error> for LrvError {
    fn from(e: std::io::Error) -> Self {
        LrvError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LrvError>;

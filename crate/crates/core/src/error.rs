use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window has zero variance; all {len} values are equal")]
    ZeroVariance { len: usize },

    #[error("degrees of freedom must be > 2, got {0}")]
    InvalidDof(f64),

    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("probability must lie in (0, 1), got {0}")]
    POutOfRange(f64),

    #[error("test statistic must be nonnegative, got {0}")]
    NegativeStatistic(f64),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("window of length {len} is too short (need at least {min})")]
    WindowTooShort { len: usize, min: usize },

    #[error("window size {window} must be smaller than sample size {total}")]
    WindowExceedsSample { window: usize, total: usize },

    #[error("kappa must be positive for the convergence band")]
    ZeroKappa,

    #[error("kappa must be nonnegative and finite, got {0}")]
    InvalidKappa(f64),

    #[error("hit sequence of length {0} is too short (need at least 2)")]
    TooShort(usize),

    #[error("violation ledger is empty")]
    EmptyLedger,

    #[error("sample is empty")]
    EmptySample,

    #[error("series of length {len} is too short for window {window} (need more than {needed})")]
    SeriesTooShort {
        len: usize,
        window: usize,
        needed: usize,
    },

    #[error("price at index {index} is not positive: {value}")]
    NonPositivePrice { index: usize, value: f64 },

    #[error("ensemble needs at least 2 replications, got {0}")]
    TooFewReplications(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dates are not strictly increasing at row {row} ({date} follows {previous})")]
    NonMonotoneDates {
        row: usize,
        date: String,
        previous: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by the caller's
    /// configuration or by the environment.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance { .. }
                | Error::NonFinite { .. }
                | Error::SeriesTooShort { .. }
                | Error::NonPositivePrice { .. }
                | Error::Parse { .. }
                | Error::NonMonotoneDates { .. }
                | Error::TooShort(_)
                | Error::EmptyLedger
                | Error::EmptySample
                | Error::WindowExceedsSample { .. }
        )
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("characteristic function is not finite at t[{index}] = {t}")]
    NonFiniteCf { index: usize, t: f64 },

    #[error("x = {x} lies outside the lattice [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("sample needs at least {required} points, got {actual}")]
    SampleTooSmall { required: usize, actual: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("sample contains a non-finite value at index {0}")]
    NonFiniteSample(usize),

    #[error("sample kurtosis {0} does not exceed 3; a Variance-Gamma law cannot match it")]
    NoExcessKurtosis(f64),

    #[error("moment system did not converge after {iterations} iterations (residual {residual:e})")]
    MomentSystem { iterations: usize, residual: f64 },

    #[error("likelihood ratio statistic {0} is negative beyond tolerance; models are not nested")]
    NestingViolation(f64),

    #[error("{0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: String, price: f64 },

    #[error("outlier rule removes {removed} of {total} points (more than half)")]
    SuspiciousRule { removed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by malformed input data, as opposed to numerical failure.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DuplicateDate(_)
                | Error::NonPositivePrice { .. }
                | Error::EmptySample
                | Error::SampleTooSmall { .. }
                | Error::NonFiniteSample(_)
                | Error::SuspiciousRule { .. }
                | Error::ZeroVariance
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

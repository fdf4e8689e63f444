use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("value {value} is outside the support [{lo}, {hi}] where the density is positive")]
    ZeroDensity { value: f64, lo: f64, hi: f64 },

    #[error("prior is irregular: virtual value decreases near v = {at}")]
    IrregularPrior { at: f64 },

    #[error("reserve index {reserve} out of range for grid size K = {k}")]
    ReserveOutOfRange { reserve: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("bid index {index} out of range for grid size K = {k}")]
    BidOutOfRange { index: usize, k: usize },

    #[error("invalid auction format: {0}")]
    InvalidFormat(String),

    #[error("enumeration of {size} profiles exceeds the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("invalid quantile strategy: {0}")]
    InvalidStrategy(String),

    #[error("reward coordinate {index} = {value} is outside [-1, 1]")]
    RewardOutOfRange { index: usize, value: f64 },

    #[error("non-finite input at coordinate {index}")]
    NonFinite { index: usize },

    #[error("invalid learner: {0}")]
    InvalidLearner(String),

    #[error("swap instance rejected: {0}")]
    SwapInstance(String),

    #[error("checkpoint mismatch at round {round}: {detail}")]
    Checkpoint { round: u64, detail: String },

    #[error("auction format failed validation at round {round}: {detail}")]
    FormatRejected { round: u64, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution mismatch: cannot map resolution {from} onto resolution {to}")]
    ResolutionMismatch { from: usize, to: usize },

    #[error("resolution {0} is not a power of two")]
    NotDyadic(usize),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value {value} at cell {cell}")]
    NonFinite { cell: usize, value: f64 },

    #[error("pointwise map produced {value} on common-grid cell {cell}")]
    Evaluation { cell: usize, value: f64 },

    #[error("negative value {value} at cell {cell}")]
    Negative { cell: usize, value: f64 },

    #[error("function integrates to {total}, not 1")]
    NotNormalized { total: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("exact occupancy DP needs {work} cell updates, over the budget of {budget}; use Monte Carlo instead")]
    BudgetExceeded { work: u128, budget: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

//! Error taxonomy shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition (dimension mismatch,
    /// mixed base points, out-of-range argument, non-finite input).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A matrix left (or was never inside) the SPD cone. The smallest
    /// eigenvalue found is reported so boundary failures are diagnosable.
    #[error("{context}: eigenvalue {eigenvalue:.6e} at or below the SPD floor {floor:.1e}")]
    Boundary {
        context: String,
        eigenvalue: f64,
        floor: f64,
    },

    /// Numerical breakdown inside a kernel (eigen-solver non-convergence,
    /// overflow in the matrix exponential).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The naive rejection bridge sampler exhausted its attempt budget.
    #[error("rejection sampler gave up after {attempts} attempts ({accepted} accepted, {requested} requested)")]
    RejectionExhausted {
        attempts: u64,
        accepted: u64,
        requested: u64,
    },

    /// Invalid run configuration, rejected before any computation starts.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// An iterative evaluation exhausted its budget.
    #[error("{func} did not converge within {iterations} iterations")]
    NonConvergence { func: &'static str, iterations: usize },

    /// A quantity that must be conditioned on has zero probability.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The density polynomial has no positive +/- sign change.
    #[error("no admissible root: {0}")]
    NoRoot(String),

    #[error("no base station in {attempts} consecutive window draws")]
    ResampleExhausted { attempts: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { func, detail: detail.into() }
    }
}

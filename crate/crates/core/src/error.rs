use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    /// A numerical routine failed to converge.
    #[error("computation error in {routine}: {message} (iterations: {iterations}, last estimate: {estimate:e})")]
    Computation {
        routine: &'static str,
        message: String,
        iterations: usize,
        estimate: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A weight row is all zeros while the noise scale is zero.
    #[error("degenerate model: row {row} has zero marginal variance")]
    DegenerateModel { row: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("infeasible recruitment: {group} acceptance probability {probability:e} is below {threshold:e}")]
    InfeasibleRecruitment {
        group: &'static str,
        probability: f64,
        threshold: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// The replication budget ran out before all replications finished.
    #[error("partial result: {completed} of {requested} replications completed before the budget was exhausted")]
    PartialResult { completed: u64, requested: u64 },

    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }
}

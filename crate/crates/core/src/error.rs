use thiserror::Error;

/// Errors shared across the analytic and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A search or iteration exceeded its certified cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// No parameter choice can satisfy the requested conditions.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A query has no finite answer (e.g. a tail that never crosses the target).
    #[error("no solution: {0}")]
    NoSolution(String),
    /// Malformed input file or serialized data.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn no_solution(msg: impl Into<String>) -> Self {
        Error::NoSolution(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

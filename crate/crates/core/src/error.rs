use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("binning error: {0}")]
    Binning(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change in bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi}) after {expansions} expansions")]
    Bracketing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        expansions: usize,
    },

    #[error("quadrature did not reach tolerance {requested:e}; achieved {achieved:e}")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("design matrix is rank deficient: smallest singular value {smallest:e} is below tolerance {tolerance:e}")]
    SingularDesign { smallest: f64, tolerance: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("no convergence after {iterations} iterations (trace: {trace:?})")]
    Convergence { iterations: usize, trace: Vec<f64> },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

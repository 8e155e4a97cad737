//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("alternative index {index} out of range for a model with {inside} inside alternatives")]
    InvalidAlternative { index: usize, inside: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Utility of some alternative was not strictly increasing in the numeraire.
    #[error("utility of alternative {alternative} is not strictly increasing in the numeraire: {detail}")]
    NonMonotoneUtility { alternative: usize, detail: String },

    #[error("quadrature did not converge on [{lower}, {upper}] after {evaluations} evaluations (error estimate {error_estimate:e})")]
    QuadratureNonConvergence { lower: f64, upper: f64, evaluations: usize, error_estimate: f64 },

    /// The integrand at the truncation point is too large for the truncated
    /// half-line integral to be trusted.
    #[error("integrand at truncation point z = {zmax} is {value:e}, above tolerance {tolerance:e}")]
    TruncationTail { zmax: f64, value: f64, tolerance: f64 },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("singular or collinear system: {0}")]
    Singular(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use thiserror::Error;

/// Library-wide error type. Validation variants name the violated
/// precondition; `Numerical` marks failures of the computation itself.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Inputs are linearly dependent where independence is required.
    #[error("dependent inputs: {0}")]
    DependentInputs(String),
    /// A stated precondition does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Malformed or out-of-range input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Overflow, non-finite intermediate, or a failed numerical check.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Steering was requested for a system whose verdict gate failed.
    #[error("not controllable: {0}")]
    NotControllable(String),
    /// The truncated representation cannot hold the requested state.
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),
}

impl Error {
    /// True for input/precondition problems, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: dimension mismatch, missing data, wrong representation.
    #[error("structural error: {0}")]
    Structural(String),
    /// A mathematical precondition does not hold (non-critical direction, φ not normal, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested computation has no implementation for this set variant.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The computation needs an assumption the caller has not asserted.
    #[error("refused: {0}")]
    Refusal(String),
    /// A standing assumption on the data (e.g. nonvanishing gradient on the zero set) fails.
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    /// The grid does not resolve the requested quantity.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// Recovery strips leave the domain or overlap for the given step.
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}

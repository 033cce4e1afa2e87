use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// Neutral recovery failed to reach the tolerance.
    #[error("fixed-point recovery did not converge at t = {t} after {iterations} iterations")]
    FixedPoint { t: f64, iterations: usize },
    #[error("{diverged} of {total} paths crossed the divergence guard")]
    Divergence { diverged: usize, total: usize },
    /// The model violates its class contract (e.g. a neutral map that is identically zero).
    #[error("model contract violation: {0}")]
    Contract(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

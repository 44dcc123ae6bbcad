use thiserror::Error;

/// Errors produced by the covering and polarization toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds the configured work budget.
    #[error("budget exceeded: {what} needs {required} but the limit is {limit}")]
    Budget {
        what: String,
        required: f64,
        limit: f64,
    },

    /// The solver strategy does not apply to the given model.
    #[error("strategy mismatch: {0}")]
    Strategy(String),

    /// Input tables are not suitable (non-exact, non-monotone, missing entries).
    #[error("invalid table: {0}")]
    Table(String),

    /// The operation is not supported for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

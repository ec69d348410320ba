use thiserror::Error;

/// Errors raised by the forward solver, the spectral routines and the
/// uniqueness / reconstruction layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integral does not converge: {0}")]
    UnboundedNorm(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("spectrum incomplete: expected index {expected}, found {found}")]
    Completeness { expected: usize, found: usize },

    #[error("not an eigenvalue: {0}")]
    NotAnEigenvalue(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("eigenvalue index swap during continuation: {0}")]
    IndexSwap(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

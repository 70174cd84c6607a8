use thiserror::Error;

/// Errors raised by models, integrators, diagnostics and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate integrator: {0}")]
    Degenerate(String),

    #[error("model `{0}` does not factorize over data blocks")]
    NonFactorizing(&'static str),

    #[error("model `{0}` is not jointly quadratic")]
    NonQuadratic(&'static str),

    #[error("covariance lost positive definiteness at t = {t}; reduce the step size")]
    NotPositiveDefinite { t: f64 },

    #[error("incompatible configurations: {0}")]
    Incompatible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

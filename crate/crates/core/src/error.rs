use thiserror::Error;

/// Errors raised by samplers, density evaluators and the fitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient enumeration: need at least {required} jumps, have {available}")]
    InsufficientEnumeration { required: usize, available: usize },

    #[error("t = {t} outside validated range ({min}, {max})")]
    Range { t: f64, min: f64, max: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("fit failure: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, PdError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(PdError::Domain(msg.into()))
}

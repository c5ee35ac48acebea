use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("level scheme inconsistent: |w1 + w3 - w2 + w4| = {residual:.6e} rad/s")]
    InconsistentLevels { residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("step size collapsed to {h:.3e} s at t = {t:.6e} s (last error norm {err_norm:.3e})")]
    Stiffness { t: f64, h: f64, err_norm: f64 },

    #[error("steady state not converged: {0}")]
    NotConverged(String),

    #[error("no threshold: {0}")]
    NoThreshold(String),

    #[error("threshold outside range: {0}")]
    ThresholdOutOfRange(String),

    #[error("resolvent pole at s = {re:.6e} + {im:.6e}i")]
    Pole { re: f64, im: f64 },

    #[error("spectrum range error: {0}")]
    Range(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

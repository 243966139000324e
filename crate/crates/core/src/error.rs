use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the scheduling, modelling and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside of the function domain: {0}")]
    Domain(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("users have equal average rates, their coefficient functions never cross")]
    DegeneratePair,

    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations (max residual {max_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        max_residual: f64,
        last_rates: Vec<f64>,
        residuals: Vec<f64>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

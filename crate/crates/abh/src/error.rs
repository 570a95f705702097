//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Configuration document could not be parsed.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A configuration field violates its invariant.
    #[error("invalid field `{field}`: {msg}")]
    Config { field: String, msg: String },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature gave up; `partial` is the best estimate reached.
    #[error("quadrature did not converge: {msg} (partial = {partial:e}, error estimate = {error_estimate:e})")]
    Quadrature {
        msg: String,
        partial: f64,
        error_estimate: f64,
    },

    /// Inputs outside the regime where the physical approximations hold.
    #[error("regime violation: {0}")]
    Regime(String),

    /// Requested combination is not implemented for this input (e.g. cutoff shape).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A characteristic left the region where a closed form holds.
    #[error("characteristic leaves its region at t = {exit_time}")]
    RegionExit { exit_time: f64 },

    /// Any other numerical failure (root not bracketed, instability, ...).
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn config(field: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            msg: msg.into(),
        }
    }
}

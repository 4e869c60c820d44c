use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of a formula.
    #[error("domain error: {what} (got {value:e})")]
    Domain { what: &'static str, value: f64 },

    /// Inconsistent or incomplete configuration of a mask, state or grid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical error: {message} (estimate {estimate:e}, error {error:e}, {evaluations} evaluations)")]
    Numerical {
        message: String,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(domain(what, value))
    }
}

pub(crate) fn require_non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(domain(what, value))
    }
}

//! Crate-wide error type.
//!
//! Errors split into two classes, mirrored by the CLI exit codes: validation
//! errors (bad parameters, bad input data, inconsistent configuration) and
//! runtime errors (failures while a simulation is underway).

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates its documented range or consistency rule.
    #[error("invalid parameter `{what}`: {why}")]
    InvalidParam { what: String, why: String },

    /// Input data (signal values, vectors, files) fails validation.
    #[error("invalid input `{what}`: {why}")]
    InvalidInput { what: String, why: String },

    /// Two containers that must agree in size do not.
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    /// The configuration is internally inconsistent in a way only detectable
    /// once values are combined (e.g. a delay model that goes negative).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A signal does not fit inside its clock window.
    #[error("timing violation: {0}")]
    Timing(String),

    /// Scaling-factor calibration cannot be computed from the given readings.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Network training did not produce a usable model.
    #[error("training failed: {0}")]
    Training(String),

    /// One or more Monte Carlo samples failed; carries the failing stream
    /// indices so the run can be reproduced sample by sample.
    #[error("{} Monte Carlo sample(s) failed; first failure at stream {}: {}",
            failures.len(),
            failures.first().map(|f| f.0).unwrap_or(0),
            failures.first().map(|f| f.1.as_str()).unwrap_or(""))]
    MonteCarlo { failures: Vec<(u64, String)> },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for [`Error::InvalidParam`].
    pub fn param(what: impl Into<String>, why: impl Into<String>) -> Self {
        Error::InvalidParam {
            what: what.into(),
            why: why.into(),
        }
    }

    /// Shorthand for [`Error::InvalidInput`].
    pub fn input(what: impl Into<String>, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what: what.into(),
            why: why.into(),
        }
    }

    /// Process exit code the CLI maps this error to: 1 for validation
    /// failures, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam { .. }
            | Error::InvalidInput { .. }
            | Error::DimensionMismatch { .. }
            | Error::Configuration(_) => 1,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_validation_from_runtime() {
        assert_eq!(Error::param("c1", "must be positive").exit_code(), 1);
        assert_eq!(Error::input("v_in", "out of range").exit_code(), 1);
        assert_eq!(Error::Configuration("negative delay".into()).exit_code(), 1);
        assert_eq!(Error::Timing("pulse exceeds window".into()).exit_code(), 2);
        assert_eq!(Error::Calibration("zero expected".into()).exit_code(), 2);
        assert_eq!(
            Error::MonteCarlo {
                failures: vec![(3, "boom".into())]
            }
            .exit_code(),
            2
        );
    }

    #[test]
    fn monte_carlo_error_reports_first_failing_stream() {
        let e = Error::MonteCarlo {
            failures: vec![(7, "negative width".into()), (12, "boom".into())],
        };
        let msg = e.to_string();
        assert!(msg.contains("2 Monte Carlo sample(s)"));
        assert!(msg.contains("stream 7"));
    }
}

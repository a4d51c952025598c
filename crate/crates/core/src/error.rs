use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input bytes (JSON/CSV syntax, missing fields, wrong types).
    #[error("parse error: {0}")]
    Parse(String),

    /// Input parsed but violates a documented contract.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("keypoint `{name}` missing at frame {frame}")]
    MissingKeypoint { name: String, frame: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("ground contact at step {step} (z = {z:.6}) during {context}")]
    GroundContact {
        context: &'static str,
        step: usize,
        z: f64,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors that stem from solver or integrator failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Lp(_) | Error::Numerical(_) | Error::GroundContact { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        // serde_json reports data errors (wrong type, missing field, failed try_from) with
        // the same line/column info as syntax errors; contract checks raised from inside
        // a TryFrom are tagged so they keep their validation class.
        let msg = e.to_string();
        if let Some(rest) = msg.strip_prefix(VALIDATION_TAG) {
            Error::Validation(rest.to_string())
        } else {
            Error::Parse(msg)
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) const VALIDATION_TAG: &str = "[validation] ";

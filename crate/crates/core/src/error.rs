use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Lambert W argument {z} lies below the branch point -1/e")]
    Domain { z: f64 },

    #[error("Lambert W iteration did not converge for z = {z} (residual {residual:e})")]
    NoConvergence { z: f64, residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("integration horizon must be positive, got {0}")]
    InvalidHorizon(f64),

    #[error("step size control failed at tau = {tau}: step {step:e} below minimum")]
    StepFailure { tau: f64, step: f64 },

    #[error("infected fraction never fell below the QSS threshold before tau = {horizon}")]
    NoQss { horizon: f64 },

    #[error("reproduction number must be positive, got {0}")]
    NonPositiveR(f64),

    #[error("no reproduction number in the search bracket reaches the target: {0}")]
    NoSolution(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("no point of the unit simplex attains level {level}")]
    EmptyCurve { level: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::StepFailure { .. }
                | Error::NoQss { .. }
                | Error::NoSolution(_)
                | Error::EmptyCurve { .. }
        )
    }

    /// Process exit code: 1 for invalid input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

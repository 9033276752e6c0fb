use thiserror::Error;

use crate::jet::JetError;

/// Errors raised by the quadrature, oracle and harness layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integrand is not finite at x = {x}")]
    Evaluation { x: f64 },

    #[error("accuracy target {requested:e} not reached (achieved {achieved:e})")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("error target not reached for n <= {limit}")]
    Saturation { limit: usize },

    #[error(transparent)]
    Jet(#[from] JetError),
}

impl Error {
    /// True for errors caused by invalid user input, as opposed to numerical
    /// or configuration failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Precondition(_)
                | Error::UnknownFunction(_)
                | Error::Jet(JetError::Domain(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

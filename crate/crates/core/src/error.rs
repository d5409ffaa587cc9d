use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported geometry: {0}")]
    Geometry(String),

    #[error("quadrature did not converge (best estimate {value:e}, error estimate {error_estimate:e}, {evaluations} evaluations)")]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("maximizer search did not converge (best value {best_value:e})")]
    OptimizerNonConvergence { best_value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::OptimizerNonConvergence { .. } | Error::Fit(_)
        )
    }
}

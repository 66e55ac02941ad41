use thiserror::Error;

use crate::planner::PlannerSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario index {index} out of range for {len} scenarios")]
    ScenarioOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("risk set has no extreme points")]
    EmptyRiskSet,

    #[error("operation needs exactly two scenarios, instance has {0}")]
    NotTwoScenarios(usize),

    #[error("prices {0} and {1} are equal; the critical first-stage quantity is undefined")]
    EqualPrices(f64, f64),

    #[error("singular linear system")]
    SingularSystem,

    #[error("singular Jacobian at ({0}, {1})")]
    SingularJacobian(f64, f64),

    #[error("prices ({0}, {1}) lie on a regime boundary")]
    RegimeBoundary(f64, f64),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("risk-averse planner did not converge after {iterations} iterations (gap {gap:e})")]
    PlannerNonConvergence {
        iterations: usize,
        gap: f64,
        incumbent: Box<PlannerSolution>,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by a solver failing to converge.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::PlannerNonConvergence { .. }
        )
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

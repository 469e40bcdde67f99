use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
///
/// Variants fall into two families that the CLI maps to distinct exit codes:
/// input/validation problems and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Validation(ValidationReport),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("f2 blows up at t = {blow_up_time:.6} (horizon too long for c0 < 0)")]
    FiniteTimeBlowUp { blow_up_time: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("time step {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-positive phi {value:e} at node (k={k}, i={i}, j={j})")]
    NonPositivePhi {
        k: usize,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::FiniteTimeBlowUp { .. }
            | Error::SolverDivergence { .. }
            | Error::SingularMatrix(_)
            | Error::NonPositivePhi { .. } => true,
            Error::AtLevel { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

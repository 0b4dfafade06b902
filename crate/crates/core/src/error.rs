use thiserror::Error;

use crate::solvers::SolverReport;

pub type Result<T> = std::result::Result<T, CmaError>;

#[derive(Debug, Error)]
pub enum CmaError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("stencil leaves the box domain at point {point}")]
    Boundary { point: usize },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("iteration limit reached after {} iterations (last residual {:.3e})", report.iterations, report.final_residual())]
    IterationLimit { report: Box<SolverReport> },

    #[error("iteration diverged after {} iterations (residual {:.3e})", report.iterations, report.final_residual())]
    Diverged { report: Box<SolverReport> },

    #[error("no constant subsolution: {0}")]
    NoSubsolution(String),

    #[error("continuation family not Cauchy after {} steps (last distance {:.3e})", distances.len(), distances.last().copied().unwrap_or(f64::NAN))]
    NonCauchy { distances: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("grid format: {0}")]
    GridFormat(String),

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CmaError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        CmaError::Validation(msg.into())
    }
}

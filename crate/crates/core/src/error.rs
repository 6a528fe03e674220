use thiserror::Error;

/// Errors raised by the solver and the estimate harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid of {points} points exceeds the memory budget of {budget} points")]
    MemoryBudget { points: usize, budget: usize },

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step {dt} is not an exact lattice shear; admissible steps are positive integer multiples of {unit}")]
    InadmissibleStep { dt: f64, unit: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(&'static str),
    #[error("element index {index} out of range ({count} elements)")]
    ElementOutOfRange { index: usize, count: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("singular matrix encountered at pivot {0}")]
    Singular(usize),
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("newton failed in time step {step}: {residual:e} after {iterations} iterations")]
    StepDivergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(alloc::string::String),
    #[error("problem has no exact solution")]
    MissingExactSolution,
    #[error("time series is empty")]
    EmptySeries,
}

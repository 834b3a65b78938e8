use thiserror::Error;

/// Errors produced by the solvers and the optimization driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("singular symbol at cosine mode ({j}, {k})")]
    SingularSymbol { j: usize, k: usize },

    #[error("incompatible mean: mean(rhs) = {mean:e} with rms(rhs) = {rms:e}")]
    IncompatibleMean { mean: f64, rms: f64 },

    #[error("field carries nonzero normal velocity on the boundary (max {0:e})")]
    BoundaryFlux(f64),

    #[error("helmholtz solve did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("blow-up at step {step}: {reason}")]
    BlowUp { step: usize, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("adjoint optimality system requires constant mobility; got {0}")]
    NonConstantMobility(String),

    #[error("expected {expected} control steps, got {got}")]
    ControlLength { expected: usize, got: usize },

    #[error("line search failed at iteration {iteration} after {halvings} halvings (step {step:e})")]
    LineSearch {
        iteration: usize,
        halvings: usize,
        step: f64,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

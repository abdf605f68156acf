use thiserror::Error;

/// Failures surfaced by model construction, linear solves and the SIRM loops.
#[derive(Debug, Error)]
pub enum SirmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("zero pivot encountered in {0}")]
    ZeroPivot(&'static str),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("non-finite state at iteration {iteration} (t = {time})")]
    NonFinite { iteration: usize, time: f64 },

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("subinterval {index}: {source}")]
    Subinterval {
        index: usize,
        #[source]
        source: Box<SirmError>,
    },

    #[error("time ranges do not overlap")]
    DisjointTimes,
}

pub type Result<T, E = SirmError> = std::result::Result<T, E>;

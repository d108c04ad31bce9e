use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("memory guard exceeded: {requested} entries requested, limit is {limit}")]
    MemoryGuard { requested: usize, limit: usize },

    #[error("point {0} lies outside the parametric interval [0, 1]")]
    OutOfDomain(f64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("function is not separable within the degree cap {cap}: {detail}")]
    NonSeparable { cap: usize, detail: String },

    #[error("boundary data is not separable (numerical rank {rank})")]
    NonSeparableBoundaryData { rank: usize },

    #[error("exponential sum rank cap {cap} exceeded (best error {best_error:e}, target {target:e})")]
    ExpSumRankCap { cap: usize, best_error: f64, target: f64 },

    #[error("eigen setup failed: {0}")]
    EigenSetup(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(op: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        op,
        detail: detail.into(),
    }
}

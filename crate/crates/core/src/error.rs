use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid polyhedron: {0}")]
    InvalidPolyhedron(String),

    #[error("projection did not converge after {sweeps} sweeps (last change {residual:e})")]
    ProjectionFailed { sweeps: usize, residual: f64 },

    #[error("subset enumeration refused: {count} constraints exceeds the cap of {cap}")]
    SubsetCapExceeded { count: usize, cap: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("sample set too large for exact assignment ({size} > {cap}); use the sliced estimator")]
    AssignmentCap { size: usize, cap: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("reference density grid too coarse: normalization residual {0:e}")]
    CoarseGrid(f64),

    #[error("rejection sampler acceptance rate {rate:e} below {floor:e}")]
    LowAcceptance { rate: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

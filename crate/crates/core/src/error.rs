use nalgebra::DVector;
use thiserror::Error;

use crate::rpca::SlrDecomposition;

pub type Result<T> = std::result::Result<T, Error>;

/// Last iterate carried by [`Error::IterationLimit`] so callers can still
/// inspect (or accept) an unconverged solution.
#[derive(Debug, Clone)]
pub enum LastIterate {
    Vector(DVector<f64>),
    Decomposition(Box<SlrDecomposition>),
}

/// Which side of a factorization an underdetermined least-squares system belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Row => write!(f, "row"),
            Axis::Column => write!(f, "column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is rank deficient: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("rotation generator is not skew-symmetric (max |B + B^T| = {0:e})")]
    InvalidRotation(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iteration limit of {iterations} reached (residual {residual:e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        last: LastIterate,
    },

    #[error("support submatrix is ill-conditioned (condition number {condition:e})")]
    IllConditionedSupport { condition: f64 },

    #[error("{axis} {index} has {observed} observations, fewer than rank {rank}")]
    UnderdeterminedRow {
        axis: Axis,
        index: usize,
        observed: usize,
        rank: usize,
    },

    #[error("SVD failed to converge")]
    SvdNoConvergence,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}

use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty polynomial")]
    EmptyPolynomial,

    #[error("grid too coarse: {grid} points, need at least {floor} ({rule})")]
    GridTooCoarse {
        grid: usize,
        floor: usize,
        rule: &'static str,
    },

    #[error("degree {degree} exceeds the density-grid limit {limit}")]
    GridTooLarge { degree: u64, limit: u64 },

    #[error("dissociation check infeasible: {0}")]
    DissociationInfeasible(String),

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("constant term is zero")]
    ZeroConstantTerm,

    #[error("root finder did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("degree {degree} exceeds the root-finding limit {limit}")]
    DegreeTooLarge { degree: u64, limit: u64 },

    #[error("degenerate grid: {excluded} of {grid} points excluded near roots")]
    DegenerateGrid { excluded: usize, grid: usize },

    #[error("stage {stage} out of range 1..={stages}")]
    StageOutOfRange { stage: usize, stages: usize },

    #[error("index error: {0}")]
    InvalidIndex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),

    #[error("n too small: delta_n = {delta:.6} >= 1 for n = {n}")]
    DegreeTooSmall { n: u64, delta: f64 },

    #[error("postcondition failed: {0}")]
    Postcondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

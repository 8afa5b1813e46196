use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constraint matrix has rank {rank}, expected full row rank {rows}")]
    RankDeficient { rank: usize, rows: usize },

    #[error("basis {indices:?} is singular (relative pivot {pivot:.3e})")]
    SingularBasis { indices: Vec<usize>, pivot: f64 },

    #[error("{count} candidate bases exceed the enumeration cap of {cap}")]
    EnumerationCapExceeded { count: u128, cap: u128 },

    #[error("no dual feasible basis exists")]
    NoDualFeasibleBasis,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("optimal solution is not unique ({vertices} distinct optimal vertices)")]
    NotUnique { vertices: usize },

    #[error("direction lies outside every stability cone")]
    NoFeasibleCone,

    #[error("covariance matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    CovarianceNotPsd { min_eigenvalue: f64 },

    #[error("not a probability vector: {0}")]
    NotAProbabilityVector(String),

    #[error("{infeasible} of {total} replicates were infeasible")]
    TooManyInfeasible { infeasible: usize, total: usize },

    #[error("empty vertex set")]
    EmptySet,

    #[error("Frank-Wolfe did not converge within {iterations} iterations (gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("combinatorial cap exceeded: {0}")]
    CapExceeded(String),

    #[error("ground points are required for this operation")]
    MissingGroundPoints,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

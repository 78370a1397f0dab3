//! Error type shared by all modules.

use thiserror::Error;

/// Errors for bound computations and operator algebra.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("state is rank-deficient (support rank {support_rank} of {dim}): {context}")]
    RankDeficient {
        support_rank: usize,
        dim: usize,
        context: String,
    },

    #[error("outside-support residual: |rho o S - x| = {residual:.3e} exceeds {tolerance:.3e}")]
    OutsideSupport { residual: f64, tolerance: f64 },

    #[error("eigenvalue {value:.6e} outside the domain of the requested matrix function (guard {guard:.3e})")]
    DomainViolation { value: f64, guard: f64 },

    #[error("support of the reference state does not cover the support of rho (leaked mass {0:.3e})")]
    SupportViolation(f64),

    #[error("constraint {index} not satisfied at the true state: residual {residual:.3e}")]
    ConstraintNotSatisfied { index: usize, residual: f64 },

    #[error("unbiased estimation impossible: dbeta is not in the range of the information matrix (residual {0:.3e})")]
    RangeConditionFailed(f64),

    #[error("infinite bound: the score of the parameter of interest lies in the nuisance tangent space")]
    InfiniteBound,

    #[error("perturbed matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    PerturbationNotPsd(f64),

    #[error("model evaluation too close to the state-space boundary: {0}")]
    BoundaryProximity(String),

    #[error("tensor dimension budget exceeded: {requested} > {budget}")]
    DimensionBudget { requested: usize, budget: usize },

    #[error("truncation m_max = {m_max} insufficient: tail estimate {tail:.3e}")]
    TruncationInsufficient { m_max: usize, tail: f64 },

    #[error("quadrature did not converge on the supplied grid (discrepancy {0:.3e})")]
    QuadratureNotConverged(f64),

    #[error("internal consistency check failed: {0}")]
    InternalCheck(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

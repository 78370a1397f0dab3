//! Numerical tolerances used across the crate.
//!
//! All thresholds are collected here so that validation logic never hides
//! ad-hoc magic numbers. Values are chosen for IEEE 754 double precision and
//! desk-scale dimensions (d up to a few hundred).

/// Entrywise absolute tolerance when validating that a matrix equals its own
/// conjugate transpose.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Tolerance on `|tr rho - 1|` for density matrices.
pub const DENSITY_TRACE_TOL: f64 = 1e-12;

/// Smallest admissible eigenvalue of a density matrix (absolute).
pub const DENSITY_EIG_TOL: f64 = -1e-12;

/// Frobenius-norm tolerance on `V^dag V - I` for eigenvector matrices.
pub const EIGVEC_UNITARITY_TOL: f64 = 1e-10;

/// Smallest admissible eigenvalue of a Gram matrix (absolute).
pub const GRAM_PSD_TOL: f64 = -1e-10;

/// Support decisions: eigenvalues below `RANK_TOL_REL * lambda_max` are
/// treated as zero.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Relative singular-value cutoff for Moore-Penrose pseudoinverses.
pub const PINV_REL_TOL: f64 = 1e-10;

/// Relative Frobenius residual allowed when reconstructing `rho o S = x`
/// after a symmetric-logarithmic-derivative solve.
pub const SLD_RESIDUAL_REL: f64 = 1e-9;

/// How precisely an equality constraint must hold at the true state.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Relative tolerance for the range condition `K K^+ dbeta = dbeta`.
pub const RANGE_TOL: f64 = 1e-8;

/// Condition-number threshold above which Gram-matrix inverses are not
/// trusted and the pseudoinverse path is flagged.
pub const GRAM_COND_LIMIT: f64 = 1e10;

/// Tolerance on `<h, I> = 0` for operators required to be zero-mean.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Absolute tolerance on `norm(psi) = 1` for pure-state vectors.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Default central-difference step; scaled by `max(1, |theta|_inf)`.
pub const FD_STEP: f64 = 1e-5;

/// Weighted-norm-squared threshold below which a Gram-Schmidt residual is
/// considered linearly dependent and dropped.
pub const GS_DROP_TOL: f64 = 1e-12;

/// Allowed probability mass of `rho` outside the support of a reference
/// state (relative-entropy support check).
pub const SUPPORT_LEAK_TOL: f64 = 1e-10;

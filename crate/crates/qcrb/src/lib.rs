//! `qcrb`: quantum estimation error bounds on finite-dimensional Hilbert spaces.
//!
//! This crate computes quantum Cramér-Rao-type lower bounds on the mean-square
//! error of unbiased estimation, for a parameter of interest that is a
//! functional of an otherwise unknown density operator:
//!
//! - **Helstrom bound** for explicit parametric families, via symmetric
//!   logarithmic derivatives (scores) and the information matrix `K`, including
//!   the pseudoinverse form and the range condition for the existence of
//!   unbiased estimators.
//! - **Generalized Helstrom bound (GHB)** in closed form for functionals of an
//!   arbitrary state (expectation values, purity, relative and von Neumann
//!   entropy, fidelity to a pure state), where the bound is the squared
//!   weighted norm of an influence operator.
//! - **Constrained bounds** when the state family is restricted by moment
//!   constraints, computed by projecting onto the span of antiscore operators.
//! - **Displacement bounds** for unitary families with a poorly characterized
//!   initial state, via the efficient score.
//! - **Holevo bound** for vector parameters as a convex minimization over
//!   influence operators, together with the D-invariant bound and the
//!   sandwich relation `H ≤ X ≤ D ≤ 2H`.
//! - **Imaging scenario**: moment estimation for subdiffraction incoherent
//!   sources with direct imaging and SPADE estimators, and the
//!   extended-convexity lower bound.
//!
//! Everything works on dense `d × d` complex Hermitian matrices with `d` up to
//! a few hundred; eigendecomposition is the single spectral primitive.
//! The [`oracle`] module provides brute-force parametric cross-checks of the
//! closed forms on small Hilbert spaces.
//!
//! ## Quick example
//!
//! ```
//! use qcrb::{DensityMatrix, Functional, ghb_full_dimensional};
//!
//! // GHB for purity estimation on a single qubit, one copy.
//! let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
//! let report = ghb_full_dimensional(&rho, &Functional::Purity, 1).unwrap();
//! assert!((report.ghb - 0.1875).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]

pub mod bounds;
pub mod error;
pub mod holevo;
pub mod imaging;
pub mod influence;
pub mod models;
pub mod operators;
pub mod oracle;
pub mod random;
pub mod tol;

pub use bounds::{
    ghb_constrained, ghb_displacement, ghb_full_dimensional, ghb_vector, helstrom_parametric,
    helstrom_parametric_scalar, scores_at_truth, submodel_lower_bound, BoundReport, Diagnostics,
};
pub use error::{Error, Result};
pub use holevo::{
    belavkin_check, d_invariant_bound, gamma_matrix, holevo_bound, holevo_objective,
    range_condition, sandwich_report, GammaMatrix, HolevoSolution, HolevoSolveOptions,
    SandwichReport,
};
pub use imaging::{
    direct_imaging_error, direct_imaging_estimator, ec_lower_bound, object_moments,
    spade_error_even, MomentVector, SourceDistribution,
};
pub use influence::{
    antiscore_operators, directional_derivative_check, functional_value, influence_operator,
    Constraint, Functional,
};
pub use models::{
    displacement_model, exponential_submodel, f0_family, finite_diff_drho, tanh_submodel,
    tensor_power, ParametricModel, SubmodelKind, SubmodelSpec,
};
pub use operators::{
    commutation_superop, gram, jordan, matrix_function, project_onto_span, solve_sld, weighted_inner,
    CMatrix, CVector, DensityMatrix, GramMatrix, HermitianOp, C64,
};

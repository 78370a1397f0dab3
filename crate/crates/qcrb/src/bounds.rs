//! Lower bounds on the mean-square error of unbiased estimation.
//!
//! Four routes to a bound live here:
//!
//! - [`helstrom_parametric`]: the classic parametric route. Scores are solved
//!   from the derivatives of the family, `K = <S,S>` is assembled, and the
//!   bound is `tr W (dbeta)^T K^+ dbeta` after the range condition
//!   `K K^+ dbeta = dbeta` has been checked.
//! - [`ghb_full_dimensional`]: the closed form for an arbitrary state family.
//!   The tangent space is everything, so the influence operator of the
//!   functional is already efficient and the bound is its squared norm.
//! - [`ghb_constrained`]: moment constraints shrink the family; the bound
//!   drops by the projection onto the antiscore span.
//! - [`ghb_displacement`]: unitary displacement families with an initial
//!   state known only through constraints; the bound is the inverse squared
//!   norm of the efficient score built from the antiscores.
//!
//! All bounds scale as `1/N` in the number of copies (the tensor-power
//! structure is exact, so `N` enters only as a scale factor).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::influence::{
    antiscore_operators, functional_value, influence_operator, Constraint, Functional,
};
use crate::models::ParametricModel;
use crate::operators::{
    gram, solve_sld, weighted_inner, weighted_norm_sq, DensityMatrix, GramMatrix, HermitianOp,
};
use crate::tol;

/// Numerical context recorded alongside a bound value.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Whether `dbeta` lies in the range of the information matrix.
    pub range_ok: bool,
    /// Condition number of the Gram matrix that was (pseudo)inverted.
    pub gram_condition: f64,
    /// Largest SLD reconstruction residual across scores.
    pub sld_residual_max: f64,
    /// Set when a singular Gram matrix forced a pseudoinverse fallback.
    pub pinv_fallback: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            range_ok: true,
            gram_condition: 1.0,
            sld_residual_max: 0.0,
            pinv_fallback: false,
        }
    }
}

/// A computed bound: the value (already scaled by `1/N`), the single-copy
/// efficient influence operator(s), and diagnostics.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Bound on the mean-square error for `n_copies` copies.
    pub ghb: f64,
    pub n_copies: u32,
    /// Efficient influence operator(s) for a single copy, one per component
    /// of the parameter of interest.
    pub efficient_influence: Vec<HermitianOp>,
    pub diagnostics: Diagnostics,
}

impl BoundReport {
    /// The single-copy bound `ghb * n_copies`.
    pub fn per_copy(&self) -> f64 {
        self.ghb * self.n_copies as f64
    }
}

fn check_copies(n_copies: u32) -> Result<f64> {
    if n_copies == 0 {
        return Err(Error::InvalidInput("n_copies must be >= 1".into()));
    }
    Ok(n_copies as f64)
}

fn check_weight(w: &DMatrix<f64>, q: usize) -> Result<()> {
    if w.nrows() != q || w.ncols() != q {
        return Err(Error::DimensionMismatch(w.nrows(), q));
    }
    if (w - w.transpose()).norm() > 1e-10 * (1.0 + w.norm()) {
        return Err(Error::InvalidInput("weight matrix must be symmetric".into()));
    }
    let min = w.clone().symmetric_eigen().eigenvalues.min();
    if min < tol::GRAM_PSD_TOL {
        return Err(Error::InvalidInput(format!(
            "weight matrix not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Scores of a model at its truth point: `S_j` solving
/// `d_j rho = rho o S_j`. Returns the truth state with the scores.
pub fn scores_at_truth(model: &ParametricModel) -> Result<(DensityMatrix, Vec<HermitianOp>)> {
    let rho = model.rho_truth()?;
    let theta0 = model.theta0().clone();
    let mut scores = Vec::with_capacity(model.param_count());
    for j in 0..model.param_count() {
        let drho = model.drho_at(&theta0, j)?;
        scores.push(solve_sld(&rho, &drho, rho.rank_tol())?);
    }
    Ok((rho, scores))
}

/// The Helstrom bound `tr W (dbeta)^T K^+ dbeta` for a parametric model.
///
/// `dbeta` is `p x q` (one column per component of the parameter of
/// interest), `w` is a `q x q` positive-semidefinite weight. Fails with
/// [`Error::RangeConditionFailed`] when some column of `dbeta` leaves the
/// range of `K`, in which case no unbiased estimator exists.
pub fn helstrom_parametric(
    model: &ParametricModel,
    dbeta: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<f64> {
    if dbeta.nrows() != model.param_count() {
        return Err(Error::DimensionMismatch(dbeta.nrows(), model.param_count()));
    }
    let q = dbeta.ncols();
    check_weight(w, q)?;
    let (rho, scores) = scores_at_truth(model)?;
    let k = gram(&rho, &scores)?;
    helstrom_from_scores(&k, dbeta, w)
}

/// Same bound, computed from an already-assembled information matrix.
pub fn helstrom_from_scores(
    k: &GramMatrix,
    dbeta: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<f64> {
    let (kp, _) = k.pinv(tol::PINV_REL_TOL);
    let residual = (k.entries() * &kp * dbeta - dbeta).norm();
    let scale = dbeta.norm().max(1.0);
    if residual > tol::RANGE_TOL * scale {
        return Err(Error::RangeConditionFailed(residual / scale));
    }
    let eff_cov = dbeta.transpose() * kp * dbeta;
    Ok((w * eff_cov).trace())
}

/// Scalar-parameter convenience wrapper around [`helstrom_parametric`].
pub fn helstrom_parametric_scalar(model: &ParametricModel, dbeta: &DVector<f64>) -> Result<f64> {
    let m = DMatrix::from_column_slice(dbeta.len(), 1, dbeta.as_slice());
    helstrom_parametric(model, &m, &DMatrix::identity(1, 1))
}

/// The generalized Helstrom bound for an arbitrary state family: the
/// tangent space is full, so the influence operator of the functional is
/// already the efficient influence and the bound is `|delta|^2 / N`.
pub fn ghb_full_dimensional(
    rho: &DensityMatrix,
    f: &Functional,
    n_copies: u32,
) -> Result<BoundReport> {
    let n = check_copies(n_copies)?;
    let delta = influence_operator(rho, f)?;
    let value = weighted_norm_sq(rho, &delta)?;
    Ok(BoundReport {
        ghb: value / n,
        n_copies,
        efficient_influence: vec![delta],
        diagnostics: Diagnostics::default(),
    })
}

struct AntiscoreProjection {
    reductions: DVector<f64>,
    weights: DMatrix<f64>,
    condition: f64,
    pinv_fallback: bool,
}

/// Solves `<R,R> w = <R, delta_k>` for all columns at once; falls back to the
/// pseudoinverse when the antiscore Gram matrix is near singular.
fn antiscore_solve(
    rho: &DensityMatrix,
    antiscores: &[HermitianOp],
    deltas: &[HermitianOp],
) -> Result<AntiscoreProjection> {
    let r = antiscores.len();
    let q = deltas.len();
    let g = gram(rho, antiscores)?;
    let condition = g.condition_number();
    let pinv_fallback = !(condition < tol::GRAM_COND_LIMIT);
    let (gp, _) = g.pinv(tol::PINV_REL_TOL);
    let mut c = DMatrix::zeros(r, q);
    for (kx, delta) in deltas.iter().enumerate() {
        for i in 0..r {
            c[(i, kx)] = weighted_inner(rho, &antiscores[i], delta)?;
        }
    }
    let weights = &gp * &c;
    let mut reductions = DVector::zeros(q);
    for kx in 0..q {
        reductions[kx] = (c.column(kx).transpose() * weights.column(kx))[(0, 0)].max(0.0);
    }
    Ok(AntiscoreProjection {
        reductions,
        weights,
        condition,
        pinv_fallback,
    })
}

/// The constrained GHB: `(|delta|^2 - <R,delta>^T <R,R>^-1 <R,delta>) / N`,
/// with efficient influence `delta - <R,delta>^T <R,R>^-1 R`.
///
/// Never exceeds the unconstrained bound. A near-singular antiscore Gram
/// matrix (linearly dependent constraints) is handled by the pseudoinverse
/// and flagged in the diagnostics.
pub fn ghb_constrained(
    rho: &DensityMatrix,
    f: &Functional,
    constraints: &[Constraint],
    n_copies: u32,
) -> Result<BoundReport> {
    let n = check_copies(n_copies)?;
    let delta = influence_operator(rho, f)?;
    if constraints.is_empty() {
        return ghb_full_dimensional(rho, f, n_copies);
    }
    let antiscores = antiscore_operators(rho, constraints)?;
    let proj = antiscore_solve(rho, &antiscores, std::slice::from_ref(&delta))?;
    let mut eff = delta.clone();
    for (i, rop) in antiscores.iter().enumerate() {
        eff = &eff - &rop.scale(proj.weights[(i, 0)]);
    }
    let value = (weighted_norm_sq(rho, &delta)? - proj.reductions[0]).max(0.0);
    Ok(BoundReport {
        ghb: value / n,
        n_copies,
        efficient_influence: vec![eff],
        diagnostics: Diagnostics {
            gram_condition: proj.condition,
            pinv_fallback: proj.pinv_fallback,
            ..Diagnostics::default()
        },
    })
}

/// Displacement estimation `rho(b) = e^{-iHb} rho0 e^{iHb}` when the initial
/// state is known only through the given constraints.
///
/// The efficient score is `S_eff = [R,H]_0^T <R,R>_0^-1 R` with
/// `[R_k, H]_0 = -i tr rho0 [R_k, H]`, and the bound is
/// `1 / (N |S_eff|_0^2)`. When every `[R_k, H]_0` vanishes, the score of the
/// displacement lies in the nuisance tangent space and no influence operator
/// exists: the bound is infinite.
pub fn ghb_displacement(
    rho0: &DensityMatrix,
    h_gen: &HermitianOp,
    constraints: &[Constraint],
    n_copies: u32,
) -> Result<BoundReport> {
    let n = check_copies(n_copies)?;
    if rho0.dim() != h_gen.dim() {
        return Err(Error::DimensionMismatch(rho0.dim(), h_gen.dim()));
    }
    if constraints.is_empty() {
        return Err(Error::InvalidInput(
            "displacement bound needs at least one constraint on the initial state".into(),
        ));
    }
    let antiscores = antiscore_operators(rho0, constraints)?;
    let r = antiscores.len();

    // [R_k, H]_0 = -i tr rho0 [R_k, H]
    let mut v = DVector::zeros(r);
    for (k, rop) in antiscores.iter().enumerate() {
        let comm = rop.commutator_times_minus_i(h_gen)?;
        v[k] = weighted_inner(rho0, &comm, &HermitianOp::identity(rho0.dim()))?;
    }
    let scale = 1.0 + h_gen.frobenius_norm()
        * antiscores
            .iter()
            .map(|a| a.frobenius_norm())
            .fold(0.0, f64::max);
    if v.amax() <= 1e-12 * scale {
        return Err(Error::InfiniteBound);
    }

    let g = gram(rho0, &antiscores)?;
    let condition = g.condition_number();
    let pinv_fallback = !(condition < tol::GRAM_COND_LIMIT);
    let (gp, _) = g.pinv(tol::PINV_REL_TOL);
    let coeff = &gp * &v;
    let s_eff_norm_sq = (v.transpose() * &coeff)[(0, 0)];
    if s_eff_norm_sq <= 0.0 {
        return Err(Error::InfiniteBound);
    }
    let mut s_eff = HermitianOp::zeros(rho0.dim());
    for (k, rop) in antiscores.iter().enumerate() {
        s_eff = &s_eff + &rop.scale(coeff[k]);
    }
    // delta_eff = S_eff / |S_eff|^2
    let eff = s_eff.scale(1.0 / s_eff_norm_sq);
    Ok(BoundReport {
        ghb: 1.0 / (n * s_eff_norm_sq),
        n_copies,
        efficient_influence: vec![eff],
        diagnostics: Diagnostics {
            gram_condition: condition,
            pinv_fallback,
            ..Diagnostics::default()
        },
    })
}

/// Vector parameter of interest: per-component efficient influences and the
/// weighted bound `tr W <delta_eff, delta_eff> / N`.
pub fn ghb_vector(
    rho: &DensityMatrix,
    fs: &[Functional],
    w: &DMatrix<f64>,
    constraints: &[Constraint],
    n_copies: u32,
) -> Result<BoundReport> {
    let n = check_copies(n_copies)?;
    let q = fs.len();
    if q == 0 {
        return Err(Error::InvalidInput("no functionals given".into()));
    }
    check_weight(w, q)?;
    let mut deltas = Vec::with_capacity(q);
    for f in fs {
        deltas.push(influence_operator(rho, f)?);
    }
    let mut diagnostics = Diagnostics::default();
    let effs = if constraints.is_empty() {
        deltas
    } else {
        let antiscores = antiscore_operators(rho, constraints)?;
        let proj = antiscore_solve(rho, &antiscores, &deltas)?;
        diagnostics.gram_condition = proj.condition;
        diagnostics.pinv_fallback = proj.pinv_fallback;
        deltas
            .iter()
            .enumerate()
            .map(|(kx, d)| {
                let mut eff = d.clone();
                for (i, rop) in antiscores.iter().enumerate() {
                    eff = &eff - &rop.scale(proj.weights[(i, kx)]);
                }
                eff
            })
            .collect()
    };
    let cov = gram(rho, &effs)?;
    let value = (w * cov.entries()).trace();
    Ok(BoundReport {
        ghb: value / n,
        n_copies,
        efficient_influence: effs,
        diagnostics,
    })
}

/// The GHB of a parametric submodel through `rho`: a lower bound on the full
/// GHB (a submodel can only make estimation easier to lower-bound).
///
/// `dbeta` is taken by central finite differences of the functional along the
/// submodel.
pub fn submodel_lower_bound(
    rho: &DensityMatrix,
    f: &Functional,
    submodel: &ParametricModel,
) -> Result<f64> {
    let truth = submodel.rho_truth()?;
    let dev = (truth.mat() - rho.mat()).norm();
    if dev > 1e-10 * (1.0 + rho.mat().norm()) {
        return Err(Error::InvalidInput(format!(
            "submodel truth deviates from rho by {dev:.3e}"
        )));
    }
    let dbeta = crate::influence::functional_dbeta(submodel, f, tol::FD_STEP)?;
    helstrom_parametric_scalar(submodel, &dbeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{exponential_submodel, f0_family, SubmodelKind, SubmodelSpec};
    use approx::assert_relative_eq;

    fn diag_rho() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn helstrom_f0_expectation_spot_value() {
        // tr rho (sz - 1/2)^2 = 3/4 at rho = diag(3/4, 1/4)
        let rho = diag_rho();
        let model = f0_family(&rho).unwrap();
        let f = Functional::Expectation(HermitianOp::pauli_z());
        let dbeta = crate::influence::functional_dbeta(&model, &f, tol::FD_STEP).unwrap();
        let h = helstrom_parametric_scalar(&model, &dbeta).unwrap();
        assert_relative_eq!(h, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn helstrom_zero_dbeta() {
        let model = f0_family(&diag_rho()).unwrap();
        let dbeta = DVector::zeros(model.param_count());
        assert_relative_eq!(
            helstrom_parametric_scalar(&model, &dbeta).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ghb_spot_values() {
        // expectation at the maximally mixed state: tr rho sz^2 = 1
        let mm = DensityMatrix::maximally_mixed(2);
        let rep =
            ghb_full_dimensional(&mm, &Functional::Expectation(HermitianOp::pauli_z()), 1).unwrap();
        assert_relative_eq!(rep.ghb, 1.0, epsilon = 1e-13);

        // purity at diag(3/4, 1/4): 3/16
        let rep = ghb_full_dimensional(&diag_rho(), &Functional::Purity, 1).unwrap();
        assert_relative_eq!(rep.ghb, 0.1875, epsilon = 1e-13);

        // von Neumann entropy at diag(3/4, 1/4)
        let rep = ghb_full_dimensional(&diag_rho(), &Functional::VonNeumannEntropy, 1).unwrap();
        let b = -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        let expect = 0.75 * (-(0.75f64.ln()) - b).powi(2) + 0.25 * (-(0.25f64.ln()) - b).powi(2);
        assert_relative_eq!(rep.ghb, expect, epsilon = 1e-12);
        assert!((rep.ghb - 0.22630).abs() < 5e-6);

        // bound equals the squared norm of the efficient influence
        assert_relative_eq!(
            rep.ghb,
            weighted_norm_sq(&diag_rho(), &rep.efficient_influence[0]).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn copies_scale_exactly() {
        let rep1 = ghb_full_dimensional(&diag_rho(), &Functional::Purity, 1).unwrap();
        let rep5 = ghb_full_dimensional(&diag_rho(), &Functional::Purity, 5).unwrap();
        assert_relative_eq!(rep5.ghb, rep1.ghb / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn constrained_pinning_gives_zero() {
        // constraint fixes tr rho sz = 1/2, which is beta itself
        let rho = diag_rho();
        let rep = ghb_constrained(
            &rho,
            &Functional::Expectation(HermitianOp::pauli_z()),
            &[Constraint::LinearMoment {
                observable: HermitianOp::pauli_z(),
                value: 0.5,
            }],
            1,
        )
        .unwrap();
        assert!(rep.ghb.abs() < 1e-12);
    }

    #[test]
    fn constrained_worked_qubit_case() {
        // Y = sz, Z = (sz + sx)/sqrt(2) at rho = (I + 0.6 sz)/2:
        // V_Y = 0.64, C_YZ = 0.64/sqrt(2), V_Z = 0.82
        let rho = DensityMatrix::bloch(0.0, 0.0, 0.6).unwrap();
        let z = (&HermitianOp::pauli_z() + &HermitianOp::pauli_x()).scale(1.0 / 2f64.sqrt());
        let zeta = weighted_inner(&rho, &z, &HermitianOp::identity(2)).unwrap();
        let rep = ghb_constrained(
            &rho,
            &Functional::Expectation(HermitianOp::pauli_z()),
            &[Constraint::LinearMoment {
                observable: z,
                value: zeta,
            }],
            1,
        )
        .unwrap();
        let expect = 0.64 - (0.64 / 2f64.sqrt()).powi(2) / 0.82;
        assert_relative_eq!(rep.ghb, expect, epsilon = 1e-12);
        assert!((rep.ghb - 0.3902).abs() < 1e-4);
    }

    #[test]
    fn constraint_never_increases_bound() {
        let rho = DensityMatrix::bloch(0.2, 0.3, -0.1).unwrap();
        let f = Functional::Purity;
        let free = ghb_full_dimensional(&rho, &f, 1).unwrap().ghb;
        let z = HermitianOp::pauli_x();
        let zeta = weighted_inner(&rho, &z, &HermitianOp::identity(2)).unwrap();
        let con = ghb_constrained(
            &rho,
            &f,
            &[Constraint::LinearMoment {
                observable: z,
                value: zeta,
            }],
            1,
        )
        .unwrap()
        .ghb;
        assert!(con <= free + 1e-12);
    }

    #[test]
    fn displacement_qubit_fixture() {
        // H = sz/2, Z = sx, rho0 = (I + 0.8 sy)/2: bound = 1/0.64
        let rho0 = DensityMatrix::bloch(0.0, 0.8, 0.0).unwrap();
        let h = HermitianOp::pauli_z().scale(0.5);
        let rep = ghb_displacement(
            &rho0,
            &h,
            &[Constraint::LinearMoment {
                observable: HermitianOp::pauli_x(),
                value: 0.0,
            }],
            1,
        )
        .unwrap();
        assert_relative_eq!(rep.ghb, 1.0 / 0.64, epsilon = 1e-12);
    }

    #[test]
    fn displacement_commuting_case_is_infinite() {
        // diagonal rho0 commutes with H = sz/2 and a diagonal Z: [Z, H]_0 = 0
        let rho0 = diag_rho();
        let h = HermitianOp::pauli_z().scale(0.5);
        let z = HermitianOp::pauli_z();
        let zeta = weighted_inner(&rho0, &z, &HermitianOp::identity(2)).unwrap();
        let err = ghb_displacement(
            &rho0,
            &h,
            &[Constraint::LinearMoment {
                observable: z,
                value: zeta,
            }],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfiniteBound));
    }

    #[test]
    fn vector_bound_examples() {
        let rho = DensityMatrix::bloch(0.0, 0.0, 0.5).unwrap();
        let fs = [
            Functional::Expectation(HermitianOp::pauli_x()),
            Functional::Expectation(HermitianOp::pauli_y()),
        ];
        let rep = ghb_vector(&rho, &fs, &DMatrix::identity(2, 2), &[], 1).unwrap();
        assert_relative_eq!(rep.ghb, 2.0, epsilon = 1e-12);

        // single element equals the scalar bound
        let rep1 = ghb_vector(
            &rho,
            &fs[..1],
            &DMatrix::identity(1, 1),
            &[],
            1,
        )
        .unwrap();
        let scalar = ghb_full_dimensional(&rho, &fs[0], 1).unwrap();
        assert_relative_eq!(rep1.ghb, scalar.ghb, epsilon = 1e-12);

        // zero weight gives zero
        let rep0 = ghb_vector(&rho, &fs, &DMatrix::zeros(2, 2), &[], 1).unwrap();
        assert!(rep0.ghb.abs() < 1e-15);
    }

    #[test]
    fn submodel_bounds() {
        let rho = DensityMatrix::bloch(0.1, 0.2, 0.3).unwrap();
        let f = Functional::Purity;
        let full = ghb_full_dimensional(&rho, &f, 1).unwrap().ghb;

        // the full-dimensional family reproduces the GHB
        let f0 = f0_family(&rho).unwrap();
        let sub = submodel_lower_bound(&rho, &f, &f0).unwrap();
        assert_relative_eq!(sub, full, epsilon = 1e-6);

        // a one-dimensional submodel in the direction of the efficient
        // influence also reproduces it
        let delta = influence_operator(&rho, &f).unwrap();
        let spec = SubmodelSpec::new(rho.clone(), delta, SubmodelKind::Exponential).unwrap();
        let sub = submodel_lower_bound(&rho, &f, &exponential_submodel(&spec).unwrap()).unwrap();
        assert_relative_eq!(sub, full, epsilon = 1e-6);

        // a direction orthogonal to the influence gives zero
        let dz = influence_operator(&rho, &f).unwrap();
        // build h orthogonal to dz: project sy off dz
        let sy = HermitianOp::pauli_y();
        let mean = weighted_inner(&rho, &sy, &HermitianOp::identity(2)).unwrap();
        let sy0 = sy.shift(mean);
        let overlap = weighted_inner(&rho, &sy0, &dz).unwrap() / weighted_norm_sq(&rho, &dz).unwrap();
        let h = &sy0 - &dz.scale(overlap);
        let spec = SubmodelSpec::new(rho.clone(), h, SubmodelKind::Exponential).unwrap();
        let sub = submodel_lower_bound(&rho, &f, &exponential_submodel(&spec).unwrap()).unwrap();
        assert!(sub.abs() < 1e-8);
    }
}

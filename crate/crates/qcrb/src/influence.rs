//! Functionals of the state, their influence operators, and antiscore
//! operators for equality constraints.
//!
//! For a parameter of interest `beta[rho]` with gradient `g` (meaning the
//! directional derivative along `rho -> rho + eps (rho o h)` equals `<h, g>`),
//! the influence operator is the zero-mean part `delta = g - <g, I>`. For an
//! equality constraint `gamma[rho] = 0` the same construction yields an
//! antiscore operator `R`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{
    jordan, weighted_inner, CVector, DensityMatrix, HermitianOp,
};
use crate::tol;

type ValueFn = dyn Fn(&HermitianOp) -> Result<f64> + Send + Sync;
type GradientFn = dyn Fn(&DensityMatrix) -> Result<HermitianOp> + Send + Sync;

/// A user-supplied functional: a value on positive operators (it may be
/// evaluated on slightly perturbed, non-normalized states during gradient
/// checks) and its gradient at a state.
#[derive(Clone)]
pub struct CustomFunctional {
    pub value: Arc<ValueFn>,
    pub gradient: Arc<GradientFn>,
}

impl std::fmt::Debug for CustomFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CustomFunctional")
    }
}

/// The parameter of interest `beta[rho]`.
#[derive(Debug, Clone)]
pub enum Functional {
    /// `beta = tr rho Y` for a fixed observable `Y`.
    Expectation(HermitianOp),
    /// `beta = tr rho^2`.
    Purity,
    /// `beta = tr rho (ln rho - ln sigma)`; requires `supp(sigma) ⊇ supp(rho)`.
    RelativeEntropy(DensityMatrix),
    /// `beta = -tr rho ln rho`.
    VonNeumannEntropy,
    /// `beta = <psi| rho |psi>` for a unit vector.
    FidelityPure(CVector),
    Custom(CustomFunctional),
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::Expectation(_) => "expectation",
            Functional::Purity => "purity",
            Functional::RelativeEntropy(_) => "relative-entropy",
            Functional::VonNeumannEntropy => "von-neumann-entropy",
            Functional::FidelityPure(_) => "fidelity-pure",
            Functional::Custom(_) => "custom",
        }
    }

    /// Entropy-type functionals need `ln rho` and therefore a full-rank state.
    pub fn needs_full_rank(&self) -> bool {
        matches!(
            self,
            Functional::RelativeEntropy(_) | Functional::VonNeumannEntropy
        )
    }
}

type ConstraintValueFn = dyn Fn(&DensityMatrix) -> Result<f64> + Send + Sync;

/// A user-supplied equality constraint `gamma[rho] = 0`.
#[derive(Clone)]
pub struct CustomConstraint {
    pub value: Arc<ConstraintValueFn>,
    pub gradient: Arc<GradientFn>,
}

impl std::fmt::Debug for CustomConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CustomConstraint")
    }
}

/// An equality constraint on the state family.
#[derive(Debug, Clone)]
pub enum Constraint {
    /// `tr rho Z = zeta`.
    LinearMoment { observable: HermitianOp, value: f64 },
    Custom(CustomConstraint),
}

fn check_dim(rho: &DensityMatrix, op: &HermitianOp) -> Result<()> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), op.dim()));
    }
    Ok(())
}

fn check_unit(psi: &CVector) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > tol::UNIT_NORM_TOL {
        return Err(Error::InvalidInput(format!(
            "fidelity target vector has norm {n}, expected 1"
        )));
    }
    Ok(())
}

/// `ln sigma` restricted to the support of `sigma` (zero on the kernel).
/// Valid inside traces against operators supported in `supp(sigma)`.
fn ln_on_support(sigma: &DensityMatrix) -> HermitianOp {
    let d = sigma.dim();
    let l = sigma.eigenvalues();
    let cut = sigma.rank_tol();
    let diag: Vec<f64> = (0..d)
        .map(|i| if l[i] > cut { l[i].ln() } else { 0.0 })
        .collect();
    let m = crate::operators::CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            crate::operators::C64::new(diag[i], 0.0)
        } else {
            crate::operators::C64::new(0.0, 0.0)
        }
    });
    sigma.from_eigenbasis(&m)
}

/// Probability mass of `rho` outside the support of `sigma`.
fn support_leak(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let d = sigma.dim();
    let cut = sigma.rank_tol();
    let mut leak = 0.0;
    for j in sigma.support_rank()..d {
        let v = sigma.eigenvectors().column(j);
        let mut val = crate::operators::C64::new(0.0, 0.0);
        let rv = rho.mat() * v;
        for i in 0..d {
            val += v[i].conj() * rv[i];
        }
        leak += val.re;
    }
    leak.max(0.0)
}

fn check_support(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    let leak = support_leak(rho, sigma);
    if leak > tol::SUPPORT_LEAK_TOL {
        return Err(Error::SupportViolation(leak));
    }
    Ok(())
}

/// `beta[rho]` for each built-in functional.
pub fn functional_value(rho: &DensityMatrix, f: &Functional) -> Result<f64> {
    match f {
        Functional::Expectation(y) => {
            check_dim(rho, y)?;
            weighted_inner(rho, y, &HermitianOp::identity(rho.dim()))
        }
        Functional::Purity => Ok(rho.eigenvalues().iter().map(|l| l * l).sum()),
        Functional::RelativeEntropy(sigma) => {
            check_dim(rho, sigma.op())?;
            check_support(rho, sigma)?;
            let lnrho_part: f64 = rho
                .eigenvalues()
                .iter()
                .map(|&l| if l > rho.rank_tol() { l * l.ln() } else { 0.0 })
                .sum();
            let lnsig = ln_on_support(sigma);
            let cross = weighted_inner(rho, &lnsig, &HermitianOp::identity(rho.dim()))?;
            Ok(lnrho_part - cross)
        }
        Functional::VonNeumannEntropy => Ok(-rho
            .eigenvalues()
            .iter()
            .map(|&l| if l > rho.rank_tol() { l * l.ln() } else { 0.0 })
            .sum::<f64>()),
        Functional::FidelityPure(psi) => {
            check_unit(psi)?;
            if psi.len() != rho.dim() {
                return Err(Error::DimensionMismatch(psi.len(), rho.dim()));
            }
            let rv = rho.mat() * psi;
            let mut val = crate::operators::C64::new(0.0, 0.0);
            for i in 0..rho.dim() {
                val += psi[i].conj() * rv[i];
            }
            Ok(val.re)
        }
        Functional::Custom(c) => (c.value)(rho.op()),
    }
}

/// `beta` extended to a positive, not necessarily normalized operator; used
/// by the directional-derivative check, which perturbs the state.
fn value_on_positive(m: &HermitianOp, f: &Functional) -> Result<f64> {
    let (vals, _) = m.eigh();
    let d = m.dim();
    let lmin = vals[d - 1];
    if lmin < -1e-10 * vals[0].abs().max(1.0) {
        return Err(Error::PerturbationNotPsd(lmin));
    }
    match f {
        Functional::Expectation(y) => {
            check_dim_op(m, y)?;
            Ok((m.mat() * y.mat()).trace().re)
        }
        Functional::Purity => Ok(vals.iter().map(|l| l * l).sum()),
        Functional::VonNeumannEntropy => Ok(-vals
            .iter()
            .map(|&l| if l > 0.0 { l * l.ln() } else { 0.0 })
            .sum::<f64>()),
        Functional::RelativeEntropy(sigma) => {
            let lnrho_part: f64 = vals
                .iter()
                .map(|&l| if l > 0.0 { l * l.ln() } else { 0.0 })
                .sum();
            let lnsig = ln_on_support(sigma);
            let cross = (m.mat() * lnsig.mat()).trace().re;
            Ok(lnrho_part - cross)
        }
        Functional::FidelityPure(psi) => {
            check_unit(psi)?;
            if psi.len() != m.dim() {
                return Err(Error::DimensionMismatch(psi.len(), m.dim()));
            }
            let rv = m.mat() * psi;
            let mut val = crate::operators::C64::new(0.0, 0.0);
            for i in 0..m.dim() {
                val += psi[i].conj() * rv[i];
            }
            Ok(val.re)
        }
        Functional::Custom(c) => (c.value)(m),
    }
}

fn check_dim_op(a: &HermitianOp, b: &HermitianOp) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// The gradient operator of `beta[rho]`: `D_h beta = <h, gradient>` for all h.
fn gradient_operator(rho: &DensityMatrix, f: &Functional) -> Result<HermitianOp> {
    match f {
        Functional::Expectation(y) => {
            check_dim(rho, y)?;
            Ok(y.clone())
        }
        Functional::Purity => Ok(rho.op().scale(2.0)),
        Functional::RelativeEntropy(sigma) => {
            check_dim(rho, sigma.op())?;
            check_support(rho, sigma)?;
            let lnrho = rho.ln()?;
            let lnsig = ln_on_support(sigma);
            Ok(&lnrho - &lnsig)
        }
        Functional::VonNeumannEntropy => Ok(-&rho.ln()?),
        Functional::FidelityPure(psi) => {
            check_unit(psi)?;
            if psi.len() != rho.dim() {
                return Err(Error::DimensionMismatch(psi.len(), rho.dim()));
            }
            Ok(HermitianOp::projector(psi))
        }
        Functional::Custom(c) => (c.gradient)(rho),
    }
}

/// The influence operator `delta = gradient - <gradient, I>`, zero-mean by
/// construction and canonicalized on the support of `rho`.
///
/// Closed forms for the built-ins: `Y - beta` (expectation), `2(rho - beta)`
/// (purity), `ln rho - ln sigma - beta` (relative entropy), `-ln rho - beta`
/// (von Neumann entropy), `|psi><psi| - beta` (fidelity).
pub fn influence_operator(rho: &DensityMatrix, f: &Functional) -> Result<HermitianOp> {
    let grad = gradient_operator(rho, f)?;
    let mean = weighted_inner(rho, &grad, &HermitianOp::identity(rho.dim()))?;
    rho.canonicalize(&grad.shift(mean))
}

/// Antiscore operators `R_k = gradient_k - <gradient_k, I>` for a set of
/// constraints, each zero-mean. Fails when a constraint does not hold at
/// `rho` within [`tol::CONSTRAINT_TOL`].
pub fn antiscore_operators(
    rho: &DensityMatrix,
    constraints: &[Constraint],
) -> Result<Vec<HermitianOp>> {
    let mut out = Vec::with_capacity(constraints.len());
    for (index, c) in constraints.iter().enumerate() {
        let (residual, grad) = match c {
            Constraint::LinearMoment { observable, value } => {
                check_dim(rho, observable)?;
                let mean =
                    weighted_inner(rho, observable, &HermitianOp::identity(rho.dim()))?;
                (mean - value, observable.clone())
            }
            Constraint::Custom(cc) => ((cc.value)(rho)?, (cc.gradient)(rho)?),
        };
        if residual.abs() > tol::CONSTRAINT_TOL {
            return Err(Error::ConstraintNotSatisfied { index, residual });
        }
        let mean = weighted_inner(rho, &grad, &HermitianOp::identity(rho.dim()))?;
        out.push(rho.canonicalize(&grad.shift(mean))?);
    }
    Ok(out)
}

/// Compares the numerical directional derivative of `beta` along
/// `rho -> rho + eps (rho o h)` against the analytic `<h, delta + beta I>`.
///
/// Returns `(numeric, analytic)`; a symmetric second-order difference is
/// used. The perturbed operators must stay positive semidefinite.
pub fn directional_derivative_check(
    rho: &DensityMatrix,
    f: &Functional,
    h: &HermitianOp,
    eps: f64,
) -> Result<(f64, f64)> {
    check_dim(rho, h)?;
    if eps <= 0.0 {
        return Err(Error::InvalidInput("eps must be > 0".into()));
    }
    let step = jordan(rho.op(), h)?;
    let up = rho.op() + &step.scale(eps);
    let dn = rho.op() + &step.scale(-eps);
    let numeric = (value_on_positive(&up, f)? - value_on_positive(&dn, f)?) / (2.0 * eps);

    let beta = functional_value(rho, f)?;
    let delta = influence_operator(rho, f)?;
    let analytic = weighted_inner(rho, h, &delta.shift(-beta))?;
    Ok((numeric, analytic))
}

/// Tolerance the gradient suite uses to compare the two derivative routes.
pub fn derivative_agreement_tol(analytic: f64) -> f64 {
    (1e-4 * analytic.abs()).max(1e-6)
}

/// Finite-difference `dbeta/dtheta` of a functional along a parametric model.
pub fn functional_dbeta(
    model: &crate::models::ParametricModel,
    f: &Functional,
    step: f64,
) -> Result<DVector<f64>> {
    let theta0 = model.theta0().clone();
    let p = model.param_count();
    let mut out = DVector::zeros(p);
    for j in 0..p {
        let mut up = theta0.clone();
        up[j] += step;
        let mut dn = theta0.clone();
        dn[j] -= step;
        let hi = functional_value(&model.rho_at(&up)?, f)?;
        let lo = functional_value(&model.rho_at(&dn)?, f)?;
        out[j] = (hi - lo) / (2.0 * step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_rho() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn functional_values() {
        let rho = diag_rho();
        assert_relative_eq!(
            functional_value(&DensityMatrix::maximally_mixed(4), &Functional::Purity).unwrap(),
            0.25,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            functional_value(&rho, &Functional::Expectation(HermitianOp::pauli_z())).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        let vn = functional_value(&rho, &Functional::VonNeumannEntropy).unwrap();
        assert_relative_eq!(vn, -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln()), epsilon = 1e-12);
        assert!((vn - 0.56234).abs() < 5e-6);
    }

    #[test]
    fn influence_closed_forms() {
        let rho = diag_rho();
        let dz = influence_operator(&rho, &Functional::Expectation(HermitianOp::pauli_z())).unwrap();
        assert!((&dz - &HermitianOp::pauli_z().shift(0.5)).frobenius_norm() < 1e-12);

        let dp = influence_operator(&rho, &Functional::Purity).unwrap();
        let beta = functional_value(&rho, &Functional::Purity).unwrap();
        assert_relative_eq!(beta, 0.625, epsilon = 1e-14);
        let expect = rho.op().shift(beta).scale(2.0);
        assert!((&dp - &expect).frobenius_norm() < 1e-12);

        // zero mean for every kind
        for f in [
            Functional::Expectation(HermitianOp::pauli_x()),
            Functional::Purity,
            Functional::VonNeumannEntropy,
            Functional::RelativeEntropy(DensityMatrix::maximally_mixed(2)),
        ] {
            let d = influence_operator(&rho, &f).unwrap();
            let mean = weighted_inner(&rho, &d, &HermitianOp::identity(2)).unwrap();
            assert!(mean.abs() < 1e-10, "{}", f.name());
        }
    }

    #[test]
    fn relative_entropy_support_check() {
        let rho = diag_rho();
        let sigma = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let err = functional_value(&rho, &Functional::RelativeEntropy(sigma)).unwrap_err();
        assert!(matches!(err, Error::SupportViolation(_)));
    }

    #[test]
    fn entropy_requires_full_rank() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(influence_operator(&pure, &Functional::VonNeumannEntropy).is_err());
    }

    #[test]
    fn antiscores() {
        let rho = DensityMatrix::bloch(0.0, 0.8, 0.0).unwrap();
        let r = antiscore_operators(
            &rho,
            &[Constraint::LinearMoment {
                observable: HermitianOp::pauli_x(),
                value: 0.0,
            }],
        )
        .unwrap();
        assert!((&r[0] - &HermitianOp::pauli_x()).frobenius_norm() < 1e-12);

        // degenerate constraint tr rho I = 1 gives the zero operator
        let r = antiscore_operators(
            &rho,
            &[Constraint::LinearMoment {
                observable: HermitianOp::identity(2),
                value: 1.0,
            }],
        )
        .unwrap();
        assert!(r[0].frobenius_norm() < 1e-12);

        // unsatisfied constraint is rejected
        let err = antiscore_operators(
            &rho,
            &[Constraint::LinearMoment {
                observable: HermitianOp::pauli_y(),
                value: 0.0,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConstraintNotSatisfied { .. }));
    }

    #[test]
    fn directional_derivative_examples() {
        let rho = diag_rho();
        let zero = HermitianOp::zeros(2);
        let (n, a) = directional_derivative_check(&rho, &Functional::Purity, &zero, 1e-5).unwrap();
        assert!(n.abs() < 1e-12 && a.abs() < 1e-12);

        // expectation: analytic = <h, Y>
        let y = HermitianOp::pauli_z();
        let h = HermitianOp::pauli_x(); // zero-mean at diagonal rho
        let (n, a) =
            directional_derivative_check(&rho, &Functional::Expectation(y.clone()), &h, 1e-6)
                .unwrap();
        let direct = weighted_inner(&rho, &h, &y).unwrap();
        assert_relative_eq!(a, direct, epsilon = 1e-12);
        assert!((n - a).abs() < derivative_agreement_tol(a));

        // purity: analytic = <h, 2 rho>
        let (n, a) = directional_derivative_check(&rho, &Functional::Purity, &h, 1e-6).unwrap();
        let direct = weighted_inner(&rho, &h, &rho.op().scale(2.0)).unwrap();
        assert_relative_eq!(a, direct, epsilon = 1e-12);
        assert!((n - a).abs() < derivative_agreement_tol(a));
    }
}

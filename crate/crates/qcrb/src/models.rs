//! Parametric density-operator families with analytic or finite-difference
//! derivatives.
//!
//! A [`ParametricModel`] is a map `theta -> rho(theta)` together with a truth
//! point. Constructors cover the full-dimensional family (every state of a
//! given dimension), one-parameter exponential and tanh submodels through a
//! fixed state, unitary displacement families, and tensor powers.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{
    matrix_function, weighted_inner, CMatrix, DensityMatrix, HermitianOp, C64,
};
use crate::tol;

type RhoFn = dyn Fn(&DVector<f64>) -> Result<DensityMatrix> + Send + Sync;
type DRhoFn = dyn Fn(&DVector<f64>, usize) -> Result<HermitianOp> + Send + Sync;

/// A smooth family `{rho(theta): theta in R^p}` with a designated truth point.
///
/// Models are immutable; evaluation at distinct parameters is pure, so a model
/// can be shared freely across threads.
#[derive(Clone)]
pub struct ParametricModel {
    dim: usize,
    theta0: DVector<f64>,
    labels: Vec<String>,
    rho_fn: Arc<RhoFn>,
    drho_fn: Option<Arc<DRhoFn>>,
}

impl std::fmt::Debug for ParametricModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricModel")
            .field("dim", &self.dim)
            .field("p", &self.param_count())
            .field("labels", &self.labels)
            .field("analytic_derivatives", &self.drho_fn.is_some())
            .finish()
    }
}

impl ParametricModel {
    pub fn new(
        dim: usize,
        theta0: DVector<f64>,
        labels: Vec<String>,
        rho_fn: Arc<RhoFn>,
        drho_fn: Option<Arc<DRhoFn>>,
    ) -> Self {
        Self {
            dim,
            theta0,
            labels,
            rho_fn,
            drho_fn,
        }
    }

    /// Number of parameters `p`.
    pub fn param_count(&self) -> usize {
        self.theta0.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta0(&self) -> &DVector<f64> {
        &self.theta0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rho_at(&self, theta: &DVector<f64>) -> Result<DensityMatrix> {
        if theta.len() != self.param_count() {
            return Err(Error::DimensionMismatch(theta.len(), self.param_count()));
        }
        (self.rho_fn)(theta)
    }

    pub fn rho_truth(&self) -> Result<DensityMatrix> {
        self.rho_at(&self.theta0.clone())
    }

    /// `d rho / d theta_j`, analytic when available, otherwise central finite
    /// differences with the default step.
    pub fn drho_at(&self, theta: &DVector<f64>, j: usize) -> Result<HermitianOp> {
        if j >= self.param_count() {
            return Err(Error::InvalidInput(format!(
                "parameter index {j} out of range (p = {})",
                self.param_count()
            )));
        }
        match &self.drho_fn {
            Some(f) => f(theta, j),
            None => finite_diff_drho(self, theta, j, default_step(theta)),
        }
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.drho_fn.is_some()
    }
}

/// Default finite-difference step, scaled by the parameter magnitude.
pub fn default_step(theta: &DVector<f64>) -> f64 {
    tol::FD_STEP * theta.amax().max(1.0)
}

/// Central-difference derivative `(rho(theta + s e_j) - rho(theta - s e_j)) / 2s`,
/// symmetrized. Fails with a boundary diagnostic when either evaluation point
/// leaves the state space.
pub fn finite_diff_drho(
    model: &ParametricModel,
    theta: &DVector<f64>,
    j: usize,
    step: f64,
) -> Result<HermitianOp> {
    if step <= 0.0 {
        return Err(Error::InvalidInput("finite-difference step must be > 0".into()));
    }
    let mut up = theta.clone();
    up[j] += step;
    let mut dn = theta.clone();
    dn[j] -= step;
    let at = |t: &DVector<f64>| {
        model.rho_at(t).map_err(|e| {
            Error::BoundaryProximity(format!("rho(theta +- step e_{j}) invalid: {e}"))
        })
    };
    let hi = at(&up)?;
    let lo = at(&dn)?;
    Ok((hi.op() - lo.op()).scale(0.5 / step))
}

/// Basis operators of the full-dimensional parametrization: diagonal
/// projectors `a_j = |j><j|` and the real/imaginary off-diagonal pairs
/// `b_k = (|k1><k2| + |k2><k1|)/2`, `c_k = i(|k1><k2| - |k2><k1|)/2`.
fn f0_basis(d: usize) -> (Vec<HermitianOp>, Vec<(usize, usize)>) {
    let mut a = Vec::with_capacity(d);
    for j in 0..d {
        let mut diag = vec![0.0; d];
        diag[j] = 1.0;
        a.push(HermitianOp::from_diagonal(&diag));
    }
    let mut pairs = Vec::new();
    for k1 in 0..d {
        for k2 in (k1 + 1)..d {
            pairs.push((k1, k2));
        }
    }
    (a, pairs)
}

fn f0_rho_mat(d: usize, theta: &DVector<f64>) -> CMatrix {
    let npairs = d * (d - 1) / 2;
    debug_assert_eq!(theta.len(), (d - 1) + 2 * npairs);
    let mut m = CMatrix::zeros(d, d);
    let mut theta_a0 = 1.0;
    for j in 1..d {
        theta_a0 -= theta[j - 1];
        m[(j, j)] = C64::new(theta[j - 1], 0.0);
    }
    m[(0, 0)] = C64::new(theta_a0, 0.0);
    let mut idx = d - 1;
    for k1 in 0..d {
        for k2 in (k1 + 1)..d {
            let b = theta[idx];
            let c = theta[idx + 1];
            idx += 2;
            m[(k1, k2)] = C64::new(b / 2.0, c / 2.0);
            m[(k2, k1)] = C64::new(b / 2.0, -c / 2.0);
        }
    }
    m
}

/// The full-dimensional family of arbitrary `d x d` states with
/// `p = d^2 - 1` parameters, placed so that `rho(theta0)` reproduces the
/// given truth exactly.
///
/// Parameters: diagonal weights `a_1 .. a_{d-1}` (the `a_0` weight is
/// eliminated by the unit trace), then per off-diagonal pair `(k1 < k2)` the
/// real part `b` and imaginary part `c`. Derivatives are analytic and
/// constant: `d rho/d a_j = a_j - a_0`, `d rho/d b_k = b_k`,
/// `d rho/d c_k = c_k`.
///
/// Rank-deficient truths are rejected; scores are undefined at the boundary
/// of state space. Callers may regularize with
/// [`DensityMatrix::mix_with_identity`] first.
pub fn f0_family(truth: &DensityMatrix) -> Result<ParametricModel> {
    let d = truth.dim();
    if d < 2 {
        return Err(Error::InvalidInput("f0_family requires d >= 2".into()));
    }
    if !truth.is_full_rank() {
        return Err(Error::RankDeficient {
            support_rank: truth.support_rank(),
            dim: d,
            context: "f0_family truth".into(),
        });
    }
    let (a, pairs) = f0_basis(d);
    let npairs = pairs.len();
    let p = (d - 1) + 2 * npairs;

    // Invert the parametrization directly from matrix entries.
    let mut theta0 = DVector::zeros(p);
    let mut labels = Vec::with_capacity(p);
    for j in 1..d {
        theta0[j - 1] = truth.mat()[(j, j)].re;
        labels.push(format!("a{j}"));
    }
    let mut idx = d - 1;
    for &(k1, k2) in &pairs {
        theta0[idx] = 2.0 * truth.mat()[(k1, k2)].re;
        theta0[idx + 1] = 2.0 * truth.mat()[(k1, k2)].im;
        labels.push(format!("b{k1}{k2}"));
        labels.push(format!("c{k1}{k2}"));
        idx += 2;
    }

    // Constant derivative operators, one per parameter.
    let mut deriv_ops = Vec::with_capacity(p);
    for j in 1..d {
        deriv_ops.push(&a[j] - &a[0]);
    }
    for &(k1, k2) in &pairs {
        let mut bmat = CMatrix::zeros(d, d);
        bmat[(k1, k2)] = C64::new(0.5, 0.0);
        bmat[(k2, k1)] = C64::new(0.5, 0.0);
        deriv_ops.push(HermitianOp::new(bmat).unwrap());
        let mut cmat = CMatrix::zeros(d, d);
        cmat[(k1, k2)] = C64::new(0.0, 0.5);
        cmat[(k2, k1)] = C64::new(0.0, -0.5);
        deriv_ops.push(HermitianOp::new(cmat).unwrap());
    }
    let deriv_ops = Arc::new(deriv_ops);

    let rho_fn = Arc::new(move |theta: &DVector<f64>| DensityMatrix::from_matrix(f0_rho_mat(d, theta)));
    let drho_fn = {
        let deriv_ops = deriv_ops.clone();
        Arc::new(move |_theta: &DVector<f64>, j: usize| Ok(deriv_ops[j].clone()))
    };
    Ok(ParametricModel::new(d, theta0, labels, rho_fn, Some(drho_fn)))
}

/// Which one-parameter submodel construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmodelKind {
    /// `sigma(t) = e^{t h/2} rho e^{t h/2} / tr`.
    Exponential,
    /// `sigma(t) = f(t h) rho f(t h) / tr` with `f(u) = 1 + tanh(u/2)`,
    /// bounded and positive for any direction.
    Tanh,
}

/// A one-parameter submodel through `base` in the zero-mean direction `h`.
#[derive(Debug, Clone)]
pub struct SubmodelSpec {
    base: DensityMatrix,
    direction: HermitianOp,
    kind: SubmodelKind,
}

impl SubmodelSpec {
    /// Validates that the direction is zero-mean: `<h, I> = 0` within
    /// [`tol::ZERO_MEAN_TOL`].
    pub fn new(base: DensityMatrix, direction: HermitianOp, kind: SubmodelKind) -> Result<Self> {
        let mean = weighted_inner(&base, &direction, &HermitianOp::identity(base.dim()))?;
        if mean.abs() > tol::ZERO_MEAN_TOL {
            return Err(Error::InvalidInput(format!(
                "submodel direction has nonzero mean {mean:.3e}"
            )));
        }
        Ok(Self {
            base,
            direction,
            kind,
        })
    }

    pub fn base(&self) -> &DensityMatrix {
        &self.base
    }

    pub fn direction(&self) -> &HermitianOp {
        &self.direction
    }

    pub fn kind(&self) -> SubmodelKind {
        self.kind
    }
}

/// Shared core of the two submodel kinds: `sigma(t) = A(t) rho A(t) / tr`,
/// where `A(t) = g(t h)` is a spectral function of the direction.
///
/// The analytic derivative follows the product rule:
/// `kappa' = A' rho A + A rho A'`, `sigma' = kappa'/tr - kappa tr(kappa')/tr^2`.
fn spectral_submodel(
    spec: &SubmodelSpec,
    g: impl Fn(f64, f64) -> f64 + Send + Sync + Copy + 'static,
    dg: impl Fn(f64, f64) -> f64 + Send + Sync + Copy + 'static,
) -> ParametricModel {
    let d = spec.base.dim();
    let rho = spec.base.clone();
    let (hv, hu) = spec.direction.eigh();

    let a_of = move |hv: &DVector<f64>, hu: &CMatrix, t: f64, f: &dyn Fn(f64, f64) -> f64| -> CMatrix {
        let d = hv.len();
        let fd = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(f(t, hv[i]), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        hu * fd * hu.adjoint()
    };

    let kappa = {
        let rho = rho.clone();
        let hv = hv.clone();
        let hu = hu.clone();
        move |t: f64| -> (CMatrix, CMatrix) {
            let a = a_of(&hv, &hu, t, &g);
            let k = &a * rho.mat() * &a;
            (k, a)
        }
    };

    let rho_fn = {
        let kappa = kappa.clone();
        Arc::new(move |theta: &DVector<f64>| -> Result<DensityMatrix> {
            let (k, _) = kappa(theta[0]);
            let tr = k.trace().re;
            if !(tr > 0.0) {
                return Err(Error::BoundaryProximity(format!(
                    "submodel normalization tr = {tr:.3e}"
                )));
            }
            DensityMatrix::from_matrix(k.map(|z| z / tr))
        })
    };

    let drho_fn = {
        let rho = rho.clone();
        Arc::new(move |theta: &DVector<f64>, _j: usize| -> Result<HermitianOp> {
            let t = theta[0];
            let (k, a) = kappa(t);
            let ap = a_of(&hv, &hu, t, &dg);
            let kp = &ap * rho.mat() * &a + &a * rho.mat() * &ap;
            let tr = k.trace().re;
            let trp = kp.trace().re;
            let m = kp.map(|z| z / tr) - k.map(|z| z * trp / (tr * tr));
            Ok(HermitianOp::from_nearly_hermitian(m))
        })
    };

    ParametricModel::new(
        d,
        DVector::zeros(1),
        vec!["theta".into()],
        rho_fn,
        Some(drho_fn),
    )
}

/// Scalar exponential family `sigma(t) = e^{t h/2} rho e^{t h/2} / tr`,
/// with `sigma(0) = rho` and score `h` at the truth.
pub fn exponential_submodel(spec: &SubmodelSpec) -> Result<ParametricModel> {
    if spec.kind != SubmodelKind::Exponential {
        return Err(Error::InvalidInput("spec kind is not Exponential".into()));
    }
    Ok(spectral_submodel(
        spec,
        |t, l| (t * l / 2.0).exp(),
        |t, l| (l / 2.0) * (t * l / 2.0).exp(),
    ))
}

/// Bounded submodel `sigma(t) = f(t h) rho f(t h) / tr` with
/// `f(u) = 1 + tanh(u/2)`; same truth and score as the exponential family.
pub fn tanh_submodel(spec: &SubmodelSpec) -> Result<ParametricModel> {
    if spec.kind != SubmodelKind::Tanh {
        return Err(Error::InvalidInput("spec kind is not Tanh".into()));
    }
    Ok(spectral_submodel(
        spec,
        |t, l| 1.0 + (t * l / 2.0).tanh(),
        |t, l| {
            let c = (t * l / 2.0).cosh();
            (l / 2.0) / (c * c)
        },
    ))
}

/// One-parameter unitary family `rho(b) = e^{-iHb} rho0 e^{iHb}` with truth
/// at `b = beta0` and analytic derivative `-i[H, rho(b)]`.
pub fn displacement_model(
    rho0: &DensityMatrix,
    h_gen: &HermitianOp,
    beta0: f64,
) -> Result<ParametricModel> {
    if rho0.dim() != h_gen.dim() {
        return Err(Error::DimensionMismatch(rho0.dim(), h_gen.dim()));
    }
    let d = rho0.dim();
    let (hv, hu) = h_gen.eigh();
    let rho0 = rho0.clone();
    let h = h_gen.clone();

    let conjugated = move |b: f64, rho0: &DensityMatrix, hv: &DVector<f64>, hu: &CMatrix| -> CMatrix {
        let phases = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(0.0, -hv[i] * b).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let u = hu * phases * hu.adjoint();
        &u * rho0.mat() * u.adjoint()
    };

    let rho_fn = {
        let rho0 = rho0.clone();
        let hv = hv.clone();
        let hu = hu.clone();
        Arc::new(move |theta: &DVector<f64>| {
            DensityMatrix::from_matrix(conjugated(theta[0], &rho0, &hv, &hu))
        })
    };
    let drho_fn = {
        Arc::new(move |theta: &DVector<f64>, _j: usize| -> Result<HermitianOp> {
            let m = conjugated(theta[0], &rho0, &hv, &hu);
            let c = h.mat() * &m - &m * h.mat();
            Ok(HermitianOp::from_nearly_hermitian(c.map(|z| z * C64::new(0.0, -1.0))))
        })
    };
    Ok(ParametricModel::new(
        d,
        DVector::from_element(1, beta0),
        vec!["beta".into()],
        rho_fn,
        Some(drho_fn),
    ))
}

/// Largest tensor dimension `d^n` a model is allowed to reach.
pub const TENSOR_DIM_BUDGET: usize = 256;

fn kron_all(parts: &[&CMatrix]) -> CMatrix {
    let mut acc = parts[0].clone();
    for part in &parts[1..] {
        acc = acc.kronecker(part);
    }
    acc
}

/// `n` independent identical copies: `rho(theta) -> rho(theta)^{x n}` with
/// product-rule derivatives and the same parameter count.
pub fn tensor_power(model: &ParametricModel, n: usize) -> Result<ParametricModel> {
    if n == 0 {
        return Err(Error::InvalidInput("tensor power requires n >= 1".into()));
    }
    if n == 1 {
        return Ok(model.clone());
    }
    let d = model.dim();
    let big = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if big > TENSOR_DIM_BUDGET {
        return Err(Error::DimensionBudget {
            requested: big,
            budget: TENSOR_DIM_BUDGET,
        });
    }
    let base = model.clone();
    let rho_fn = {
        let base = base.clone();
        Arc::new(move |theta: &DVector<f64>| -> Result<DensityMatrix> {
            let single = base.rho_at(theta)?;
            let parts: Vec<&CMatrix> = (0..n).map(|_| single.mat()).collect();
            DensityMatrix::from_matrix(kron_all(&parts))
        })
    };
    let drho_fn = {
        let base = base.clone();
        Arc::new(move |theta: &DVector<f64>, j: usize| -> Result<HermitianOp> {
            let single = base.rho_at(theta)?;
            let dsingle = base.drho_at(theta, j)?;
            let mut total = CMatrix::zeros(big, big);
            for slot in 0..n {
                let parts: Vec<&CMatrix> = (0..n)
                    .map(|m| if m == slot { dsingle.mat() } else { single.mat() })
                    .collect();
                total += kron_all(&parts);
            }
            Ok(HermitianOp::from_nearly_hermitian(total))
        })
    };
    Ok(ParametricModel::new(
        big,
        model.theta0().clone(),
        model.labels().to_vec(),
        rho_fn,
        Some(drho_fn),
    ))
}

/// Exponential of a Hermitian operator (spectral), exposed for scenario code.
pub fn hermitian_exp(h: &HermitianOp) -> HermitianOp {
    matrix_function(h, &|l| l.exp(), f64::NEG_INFINITY).expect("exp has full domain")
}

/// Numerical score of a model at its truth: the SLD of the finite-difference
/// derivative. Convenience for tests and scenario checks.
pub fn numerical_score(model: &ParametricModel, j: usize) -> Result<HermitianOp> {
    let rho = model.rho_truth()?;
    let drho = finite_diff_drho(model, model.theta0(), j, default_step(model.theta0()))?;
    crate::operators::solve_sld(&rho, &drho, rho.rank_tol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::solve_sld;
    use approx::assert_relative_eq;

    fn diag_rho() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn f0_parameter_counts() {
        assert_eq!(f0_family(&diag_rho()).unwrap().param_count(), 3);
        let qutrit = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(f0_family(&qutrit).unwrap().param_count(), 8);
    }

    #[test]
    fn f0_truth_reproduced_entrywise() {
        let rho = DensityMatrix::bloch(0.3, -0.2, 0.4).unwrap();
        let model = f0_family(&rho).unwrap();
        let back = model.rho_truth().unwrap();
        assert!((back.mat() - rho.mat()).norm() < 1e-14);
    }

    #[test]
    fn f0_rejects_boundary() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            f0_family(&pure),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn f0_finite_diff_matches_analytic() {
        let rho = DensityMatrix::bloch(0.1, 0.2, -0.3).unwrap();
        let model = f0_family(&rho).unwrap();
        for j in 0..model.param_count() {
            let fd = finite_diff_drho(&model, model.theta0(), j, 1e-4).unwrap();
            let an = model.drho_at(model.theta0(), j).unwrap();
            assert!((&fd - &an).frobenius_norm() < 1e-8, "param {j}");
        }
    }

    #[test]
    fn exponential_submodel_diagonal_case() {
        // rho = I/2, h = sigma_z: sigma(t) = diag(e^t, e^-t)/(e^t + e^-t)
        let spec = SubmodelSpec::new(
            DensityMatrix::maximally_mixed(2),
            HermitianOp::pauli_z(),
            SubmodelKind::Exponential,
        )
        .unwrap();
        let model = exponential_submodel(&spec).unwrap();
        let t = 0.7;
        let sigma = model.rho_at(&DVector::from_element(1, t)).unwrap();
        let z = t.exp() + (-t).exp();
        assert_relative_eq!(sigma.mat()[(0, 0)].re, t.exp() / z, epsilon = 1e-12);
        assert_relative_eq!(sigma.mat()[(1, 1)].re, (-t).exp() / z, epsilon = 1e-12);

        let at0 = model.rho_truth().unwrap();
        assert!((at0.mat() - DensityMatrix::maximally_mixed(2).mat()).norm() < 1e-14);
    }

    #[test]
    fn submodel_scores_equal_direction() {
        let rho = DensityMatrix::bloch(0.2, 0.1, 0.5).unwrap();
        let mean = weighted_inner(&rho, &HermitianOp::pauli_x(), &HermitianOp::identity(2)).unwrap();
        let h = HermitianOp::pauli_x().shift(mean);
        for kind in [SubmodelKind::Exponential, SubmodelKind::Tanh] {
            let spec = SubmodelSpec::new(rho.clone(), h.clone(), kind).unwrap();
            let model = match kind {
                SubmodelKind::Exponential => exponential_submodel(&spec).unwrap(),
                SubmodelKind::Tanh => tanh_submodel(&spec).unwrap(),
            };
            // numerical score (SLD of the finite-difference derivative) is h
            let score = numerical_score(&model, 0).unwrap();
            assert!(
                (&score - &h).frobenius_norm() < 1e-6,
                "{kind:?} score deviates by {}",
                (&score - &h).frobenius_norm()
            );
            // analytic derivative agrees with finite differences
            let an = model.drho_at(model.theta0(), 0).unwrap();
            let fd = finite_diff_drho(&model, model.theta0(), 0, 1e-5).unwrap();
            assert!((&an - &fd).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn displacement_model_basics() {
        let rho0 = DensityMatrix::bloch(0.0, 0.8, 0.0).unwrap();
        let h = HermitianOp::pauli_z().scale(0.5);
        let model = displacement_model(&rho0, &h, 0.0).unwrap();
        assert!((model.rho_truth().unwrap().mat() - rho0.mat()).norm() < 1e-14);

        // commuting generator leaves a diagonal state fixed
        let diag = diag_rho();
        let fixed = displacement_model(&diag, &h, 0.0).unwrap();
        let moved = fixed.rho_at(&DVector::from_element(1, 2.3)).unwrap();
        assert!((moved.mat() - diag.mat()).norm() < 1e-13);

        // analytic -i[H, rho] vs finite differences
        let an = model.drho_at(model.theta0(), 0).unwrap();
        let fd = finite_diff_drho(&model, model.theta0(), 0, 1e-5).unwrap();
        assert!((&an - &fd).frobenius_norm() < 1e-7);

        // score at truth is the commutation superoperator applied to H
        let score = solve_sld(&rho0, &an, rho0.rank_tol()).unwrap();
        let dh = crate::operators::commutation_superop(&rho0, &h, rho0.rank_tol()).unwrap();
        assert!((&score - &dh).frobenius_norm() < 1e-10);
    }

    #[test]
    fn tensor_power_basics() {
        let rho = diag_rho();
        let model = f0_family(&rho).unwrap();
        let doubled = tensor_power(&model, 2).unwrap();
        assert_eq!(doubled.dim(), 4);
        assert_eq!(doubled.param_count(), model.param_count());
        let big = doubled.rho_truth().unwrap();
        assert_relative_eq!(big.op().trace(), 1.0, epsilon = 1e-13);

        // n = 1 returns the original
        let same = tensor_power(&model, 1).unwrap();
        assert_eq!(same.dim(), 2);

        assert!(matches!(
            tensor_power(&model, 20),
            Err(Error::DimensionBudget { .. })
        ));
    }

    #[test]
    fn drho_traceless() {
        let rho = DensityMatrix::bloch(0.1, -0.4, 0.2).unwrap();
        let model = f0_family(&rho).unwrap();
        for j in 0..model.param_count() {
            assert!(model.drho_at(model.theta0(), j).unwrap().trace().abs() < 1e-8);
        }
    }

    #[test]
    fn finite_diff_constant_family_is_zero() {
        let rho = diag_rho();
        let rho_fn = Arc::new(move |_: &DVector<f64>| Ok(rho.clone()));
        let model = ParametricModel::new(2, DVector::zeros(1), vec!["t".into()], rho_fn, None);
        let d = finite_diff_drho(&model, model.theta0(), 0, 1e-4).unwrap();
        assert!(d.frobenius_norm() < 1e-14);
    }
}

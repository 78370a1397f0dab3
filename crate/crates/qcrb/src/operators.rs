//! Dense Hermitian operator algebra over a finite Hilbert space.
//!
//! Provides the two carrier types [`HermitianOp`] and [`DensityMatrix`], the
//! rho-weighted inner product `<h,g> = tr rho (h o g)` with `o` the Jordan
//! product, symmetric-logarithmic-derivative solves, spectral matrix
//! functions, and least-squares projections onto operator spans.
//!
//! Eigendecomposition is the single spectral primitive; everything assumes
//! desk-scale dimensions where a dense `d x d` eigensolve is cheap.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

fn cplx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(m + m^dag)/2`, removing rounding-level asymmetry from products.
fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let vals = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let vecs = CMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// A self-adjoint operator on a `d`-dimensional Hilbert space.
///
/// This is the universal carrier: observables, scores, influence operators,
/// and antiscores are all `HermitianOp`s. Values are immutable after
/// construction and all operations are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    mat: CMatrix,
}

impl HermitianOp {
    /// Validates Hermiticity entrywise within [`tol::HERMITICITY_TOL`].
    pub fn new(mat: CMatrix) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n {
            return Err(Error::DimensionMismatch(n, mat.ncols()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let diff = mat[(i, j)] - mat[(j, i)].conj();
                worst = worst.max(diff.norm());
            }
        }
        if worst > tol::HERMITICITY_TOL {
            return Err(Error::NotHermitian(worst));
        }
        // Store the exactly Hermitian representative.
        Ok(Self {
            mat: hermitian_part(&mat),
        })
    }

    /// Accepts a matrix that is Hermitian up to rounding noise and symmetrizes
    /// it. For results of operator arithmetic that are Hermitian by algebra.
    pub(crate) fn from_nearly_hermitian(mat: CMatrix) -> Self {
        Self {
            mat: hermitian_part(&mat),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self {
            mat: CMatrix::from_fn(d, d, |i, j| if i == j { cplx(diag[i]) } else { cplx(0.0) }),
        }
    }

    /// Rank-one projector `|psi><psi|` (psi need not be normalized).
    pub fn projector(psi: &CVector) -> Self {
        Self {
            mat: psi * psi.adjoint(),
        }
    }

    pub fn pauli_x() -> Self {
        Self::new(CMatrix::from_row_slice(2, 2, &[
            cplx(0.0), cplx(1.0),
            cplx(1.0), cplx(0.0),
        ]))
        .unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::new(CMatrix::from_row_slice(2, 2, &[
            cplx(0.0), C64::new(0.0, -1.0),
            C64::new(0.0, 1.0), cplx(0.0),
        ]))
        .unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    /// Trace (real for a Hermitian operator).
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.map(|z| z * s),
        }
    }

    /// `self - c * I`.
    pub fn shift(&self, c: f64) -> Self {
        let d = self.dim();
        let mut mat = self.mat.clone();
        for i in 0..d {
            mat[(i, i)] -= cplx(c);
        }
        Self { mat }
    }

    /// Eigendecomposition `(eigenvalues descending, eigenvectors as columns)`.
    pub fn eigh(&self) -> (DVector<f64>, CMatrix) {
        eigh(&self.mat)
    }

    /// `i[a, b]` is Hermitian when `a`, `b` are; returns `-i[self, other]`.
    pub fn commutator_times_minus_i(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let c = &self.mat * &other.mat - &other.mat * &self.mat;
        Ok(Self::from_nearly_hermitian(c.map(|z| z * C64::new(0.0, -1.0))))
    }
}

impl std::ops::Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Neg for &HermitianOp {
    type Output = HermitianOp;
    fn neg(self) -> HermitianOp {
        self.scale(-1.0)
    }
}

fn check_dims(a: &HermitianOp, b: &HermitianOp) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// A density matrix: positive semidefinite, unit trace, with a cached
/// eigendecomposition (eigenvalues descending).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: HermitianOp,
    eigvals: DVector<f64>,
    eigvecs: CMatrix,
    support_rank: usize,
}

impl DensityMatrix {
    pub fn new(op: HermitianOp) -> Result<Self> {
        let d = op.dim();
        let tr = op.trace();
        if (tr - 1.0).abs() > tol::DENSITY_TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let (eigvals, eigvecs) = op.eigh();
        if eigvals[d - 1] < tol::DENSITY_EIG_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:.3e}",
                eigvals[d - 1]
            )));
        }
        let unit_err = (eigvecs.adjoint() * &eigvecs - CMatrix::identity(d, d)).norm();
        if unit_err > tol::EIGVEC_UNITARITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "eigenvector matrix not unitary (residual {unit_err:.3e})"
            )));
        }
        let rank_tol = tol::RANK_TOL_REL * eigvals[0].max(0.0);
        let support_rank = eigvals.iter().filter(|&&l| l > rank_tol).count();
        Ok(Self {
            op,
            eigvals,
            eigvecs,
            support_rank,
        })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOp::new(mat)?)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianOp::from_diagonal(diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new(HermitianOp::from_diagonal(&vec![1.0 / dim as f64; dim])).unwrap()
    }

    /// Qubit state `(I + x sx + y sy + z sz)/2`; requires `x^2+y^2+z^2 <= 1`.
    pub fn bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let mat = CMatrix::from_row_slice(2, 2, &[
            C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0),
        ]);
        Self::from_matrix(mat)
    }

    /// Pure state `|psi><psi|` from a normalized vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > tol::UNIT_NORM_TOL {
            return Err(Error::InvalidInput(format!("state vector norm {n} is not 1")));
        }
        Self::new(HermitianOp::projector(psi))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn mat(&self) -> &CMatrix {
        self.op.mat()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigvecs
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.support_rank == self.dim()
    }

    /// Absolute threshold below which eigenvalues count as zero.
    pub fn rank_tol(&self) -> f64 {
        tol::RANK_TOL_REL * self.eigvals[0].max(0.0)
    }

    /// Rotate an operator into the eigenbasis of `rho`: `V^dag x V`.
    pub fn to_eigenbasis(&self, x: &HermitianOp) -> CMatrix {
        self.eigvecs.adjoint() * x.mat() * &self.eigvecs
    }

    /// Rotate eigenbasis entries back: `V m V^dag`, symmetrized.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> HermitianOp {
        HermitianOp::from_nearly_hermitian(&self.eigvecs * m * self.eigvecs.adjoint())
    }

    /// `ln rho`; requires full rank.
    pub fn ln(&self) -> Result<HermitianOp> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                support_rank: self.support_rank,
                dim: self.dim(),
                context: "ln rho".into(),
            });
        }
        matrix_function(&self.op, &|l| l.ln(), 0.0)
    }

    /// Boundary regularization `(1 - eps) rho + eps I/d`.
    pub fn mix_with_identity(&self, eps: f64) -> Self {
        let d = self.dim();
        let mixed = &self.op.scale(1.0 - eps) + &HermitianOp::identity(d).scale(eps / d as f64);
        Self::new(mixed).expect("mixing with I/d preserves validity")
    }

    /// Canonical representative of the equivalence class of `h`: entries of
    /// the block entirely outside `supp(rho)` are zeroed in the eigenbasis.
    pub fn canonicalize(&self, h: &HermitianOp) -> Result<HermitianOp> {
        check_dims(&self.op, h)?;
        if self.is_full_rank() {
            return Ok(h.clone());
        }
        let mut m = self.to_eigenbasis(h);
        let r = self.support_rank;
        for i in r..self.dim() {
            for j in r..self.dim() {
                m[(i, j)] = cplx(0.0);
            }
        }
        Ok(self.from_eigenbasis(&m))
    }
}

/// Jordan product `(ab + ba)/2`.
pub fn jordan(a: &HermitianOp, b: &HermitianOp) -> Result<HermitianOp> {
    check_dims(a, b)?;
    let m = a.mat() * b.mat() + b.mat() * a.mat();
    Ok(HermitianOp::from_nearly_hermitian(m.map(|z| z * 0.5)))
}

/// The weighted inner product `<h,g> = tr rho (h o g)`.
///
/// Equals `Re tr(rho h g)`, so only one triple product is formed.
pub fn weighted_inner(rho: &DensityMatrix, h: &HermitianOp, g: &HermitianOp) -> Result<f64> {
    check_dims(rho.op(), h)?;
    check_dims(h, g)?;
    let rh = rho.mat() * h.mat();
    // tr(rh * g) without forming the product matrix
    let d = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += rh[(i, k)] * g.mat()[(k, i)];
        }
    }
    Ok(acc.re)
}

/// Weighted norm squared `<h,h>`.
pub fn weighted_norm_sq(rho: &DensityMatrix, h: &HermitianOp) -> Result<f64> {
    weighted_inner(rho, h, h)
}

/// A real symmetric positive-semidefinite Gram matrix of weighted inner
/// products, e.g. the Helstrom information matrix `K = <S,S>`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    m: DMatrix<f64>,
}

/// Rank and conditioning data from a pseudoinverse.
#[derive(Debug, Clone, Copy)]
pub struct PinvInfo {
    pub rank: usize,
    /// `lambda_max / lambda_min` over the retained spectrum; infinite when
    /// the matrix is singular at the requested cutoff.
    pub condition: f64,
}

impl GramMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(n, m.ncols()));
        }
        let sym = (&m + m.transpose()).scale(0.5);
        let eigs = sym.clone().symmetric_eigen().eigenvalues;
        let min = eigs.min();
        if min < tol::GRAM_PSD_TOL {
            return Err(Error::InvalidInput(format!(
                "Gram matrix not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { m: sym })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.m.clone().symmetric_eigen().eigenvalues.min()
    }

    /// `lambda_max / lambda_min`; infinite for a singular matrix.
    pub fn condition_number(&self) -> f64 {
        let eig = self.m.clone().symmetric_eigen().eigenvalues;
        let max = eig.max();
        let min = eig.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Moore-Penrose pseudoinverse; eigenvalues below `rel_tol * lambda_max`
    /// are truncated.
    pub fn pinv(&self, rel_tol: f64) -> (DMatrix<f64>, PinvInfo) {
        let n = self.dim();
        let se = self.m.clone().symmetric_eigen();
        let lmax = se.eigenvalues.max().max(0.0);
        let cut = rel_tol * lmax;
        let mut rank = 0;
        let mut lmin_kept = f64::INFINITY;
        let inv_diag = DVector::from_fn(n, |i, _| {
            let l = se.eigenvalues[i];
            if l > cut && l > 0.0 {
                rank += 1;
                lmin_kept = lmin_kept.min(l);
                1.0 / l
            } else {
                0.0
            }
        });
        let v = &se.eigenvectors;
        let pinv = v * DMatrix::from_diagonal(&inv_diag) * v.transpose();
        let condition = if rank == n && rank > 0 {
            lmax / lmin_kept
        } else {
            f64::INFINITY
        };
        (pinv, PinvInfo { rank, condition })
    }

    /// `c^T K^+ c` for a coefficient vector.
    pub fn pinv_quad_form(&self, c: &DVector<f64>, rel_tol: f64) -> f64 {
        let (p, _) = self.pinv(rel_tol);
        (c.transpose() * p * c)[(0, 0)]
    }
}

/// Solves `rho o S = x` for the symmetric logarithmic derivative `S`.
///
/// In the eigenbasis of `rho`, `S_jk = 2 x_jk / (l_j + l_k)` whenever
/// `l_j + l_k > rank_tol`, and 0 otherwise. When `x` has weight outside the
/// support of `rho` the equation has no solution and the reconstruction
/// residual check fails.
pub fn solve_sld(rho: &DensityMatrix, x: &HermitianOp, rank_tol: f64) -> Result<HermitianOp> {
    check_dims(rho.op(), x)?;
    let d = rho.dim();
    let xt = rho.to_eigenbasis(x);
    let l = rho.eigenvalues();
    let mut st = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let denom = l[j] + l[k];
            if denom > rank_tol {
                st[(j, k)] = xt[(j, k)] * cplx(2.0 / denom);
            }
        }
    }
    let s = rho.from_eigenbasis(&st);
    let recon = jordan(rho.op(), &s)?;
    let residual = (&recon - x).frobenius_norm();
    let tolerance = tol::SLD_RESIDUAL_REL * x.frobenius_norm();
    if residual > tolerance.max(1e-300) {
        return Err(Error::OutsideSupport { residual, tolerance });
    }
    Ok(s)
}

/// The commutation superoperator `D h`, defined by
/// `<g, D h> = -i tr rho [g, h]` for all `g`.
///
/// In the eigenbasis of `rho`: `(D h)_jk = 2i (l_j - l_k) h_jk / (l_j + l_k)`.
pub fn commutation_superop(
    rho: &DensityMatrix,
    h: &HermitianOp,
    rank_tol: f64,
) -> Result<HermitianOp> {
    check_dims(rho.op(), h)?;
    let d = rho.dim();
    let ht = rho.to_eigenbasis(h);
    let l = rho.eigenvalues();
    let mut dt = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let denom = l[j] + l[k];
            if denom > rank_tol {
                dt[(j, k)] = ht[(j, k)] * C64::new(0.0, 2.0 * (l[j] - l[k]) / denom);
            }
        }
    }
    let dh = rho.from_eigenbasis(&dt);
    // rho o (D h) must reconstruct -i[h, rho]
    let target = {
        let c = h.mat() * rho.mat() - rho.mat() * h.mat();
        HermitianOp::from_nearly_hermitian(c.map(|z| z * C64::new(0.0, -1.0)))
    };
    let recon = jordan(rho.op(), &dh)?;
    let residual = (&recon - &target).frobenius_norm();
    let tolerance = tol::SLD_RESIDUAL_REL * target.frobenius_norm();
    if residual > tolerance.max(1e-300) {
        return Err(Error::OutsideSupport { residual, tolerance });
    }
    Ok(dh)
}

/// Applies a scalar function to the spectrum of `a`; eigenvectors are kept.
///
/// Every eigenvalue must exceed `domain_guard` (use `f64::NEG_INFINITY` for
/// functions defined on all of R, `0.0` for `ln`).
pub fn matrix_function(
    a: &HermitianOp,
    f: &dyn Fn(f64) -> f64,
    domain_guard: f64,
) -> Result<HermitianOp> {
    let (vals, vecs) = a.eigh();
    for &l in vals.iter() {
        if !(l > domain_guard) {
            return Err(Error::DomainViolation {
                value: l,
                guard: domain_guard,
            });
        }
    }
    let d = a.dim();
    let fd = CMatrix::from_fn(d, d, |i, j| if i == j { cplx(f(vals[i])) } else { cplx(0.0) });
    Ok(HermitianOp::from_nearly_hermitian(&vecs * fd * vecs.adjoint()))
}

/// Least-squares projection of `delta` onto `span(basis)` under the weighted
/// inner product: `Pi = <basis,delta>^T <basis,basis>^+ basis`.
///
/// Returns `(Pi(delta|span), |Pi|^2)`.
pub fn project_onto_span(
    rho: &DensityMatrix,
    delta: &HermitianOp,
    basis: &[HermitianOp],
    pinv_tol: f64,
) -> Result<(HermitianOp, f64)> {
    if basis.is_empty() {
        return Ok((HermitianOp::zeros(rho.dim()), 0.0));
    }
    let c = DVector::from_fn(basis.len(), |i, _| {
        weighted_inner(rho, &basis[i], delta).expect("dims checked below")
    });
    for b in basis {
        check_dims(rho.op(), b)?;
    }
    check_dims(rho.op(), delta)?;
    let k = gram(rho, basis)?;
    let (kp, _) = k.pinv(pinv_tol);
    let w = &kp * &c;
    let mut proj = HermitianOp::zeros(rho.dim());
    for (i, b) in basis.iter().enumerate() {
        proj = &proj + &b.scale(w[i]);
    }
    let norm_sq = (c.transpose() * &w)[(0, 0)];
    Ok((proj, norm_sq.max(0.0)))
}

/// Gram matrix `<ops, ops>` of weighted inner products.
pub fn gram(rho: &DensityMatrix, ops: &[HermitianOp]) -> Result<GramMatrix> {
    let n = ops.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = weighted_inner(rho, &ops[i], &ops[j])?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    GramMatrix::new(m)
}

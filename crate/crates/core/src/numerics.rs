//! Dense complex linear algebra on density matrices and superoperators.
//!
//! Vectorization is column-stacking throughout: `vec(X)[i + d*j] = X[(i, j)]`,
//! so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use alloc::vec::Vec;

use nalgebra::Complex;
use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues with `|μ| <= KERNEL_TOL` count as zero modes of a generator.
pub const KERNEL_TOL: f64 = 1e-9;
/// Default tolerance for merging nearly equal eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-8;
const EIG_EPS: f64 = f64::EPSILON;
// Machine epsilon stalls the complex QR iteration on larger superoperators.
const SCHUR_EPS: [f64; 2] = [1e-14, 1e-12];

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().copied().sum()
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    Ok(a.nrows())
}

fn check_hermitian(a: &CMatrix) -> Result<usize> {
    let d = check_square(a)?;
    let defect = hermiticity_defect(a);
    let scale = max_abs(a).max(1.0);
    if !(defect <= HERMITIAN_TOL * scale) {
        return Err(Error::NonHermitianInput(defect));
    }
    Ok(d)
}

/// Raw Hermitian eigendecomposition: ascending eigenvalues, eigenvectors as columns.
pub fn eigh_raw(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let d = check_hermitian(h)?;
    if d == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(hermitize(h), EIG_EPS, 10_000 * d).ok_or(Error::EigensolverFailure)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Spectral decomposition `H = Σ λ_i Π_i` with clustered eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    projectors: Vec<CMatrix>,
    // Orthonormal eigenbasis, columns grouped by cluster in ascending order.
    basis: CMatrix,
    offsets: Vec<usize>,
}

impl Spectrum {
    /// Builds a spectrum from ascending raw eigenvalues and matching orthonormal
    /// eigenvector columns. Consecutive eigenvalues closer than `cluster_tol`
    /// are merged; a cluster reports the mean of its members.
    pub fn from_eigenpairs(values: &[f64], vectors: CMatrix, cluster_tol: f64) -> Result<Self> {
        let d = values.len();
        if vectors.nrows() != d || vectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: vectors.ncols() });
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("eigenvalues must be sorted"));
        }
        let mut eigenvalues = Vec::new();
        let mut multiplicities = Vec::new();
        let mut offsets = Vec::new();
        let mut start = 0;
        while start < d {
            let mut end = start + 1;
            while end < d && values[end] - values[end - 1] <= cluster_tol {
                end += 1;
            }
            let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
            eigenvalues.push(mean);
            multiplicities.push(end - start);
            offsets.push(start);
            start = end;
        }
        offsets.push(d);
        let projectors = (0..eigenvalues.len())
            .map(|k| {
                let block = vectors.columns(offsets[k], offsets[k + 1] - offsets[k]);
                block * block.adjoint()
            })
            .collect();
        Ok(Self { eigenvalues, multiplicities, projectors, basis: vectors, offsets })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Column range of cluster `k` inside [`Spectrum::basis`].
    pub fn columns(&self, k: usize) -> core::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Applies an affine map to every eigenvalue, keeping the eigenbasis.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for l in out.eigenvalues.iter_mut() {
            *l = f(*l);
        }
        out
    }

    /// `Σ_i f(λ_i) Π_i`, formed in the eigenbasis.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_complex(|l| c(f(l)))
    }

    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.basis.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let v = f(l);
            for col in self.columns(k) {
                for r in 0..d {
                    scaled[(r, col)] *= v;
                }
            }
        }
        scaled * self.basis.adjoint()
    }

    /// Reassembles `Σ λ_i Π_i`.
    pub fn hamiltonian(&self) -> CMatrix {
        self.apply(|l| l)
    }
}

/// Clustered Hermitian eigendecomposition.
pub fn eigh(h: &CMatrix, cluster_tol: f64) -> Result<Spectrum> {
    let (values, vectors) = eigh_raw(h)?;
    Spectrum::from_eigenpairs(&values, vectors, cluster_tol)
}

/// Functional calculus `Σ_i f(λ_i) Π_i`.
pub fn apply_function(s: &Spectrum, f: impl Fn(f64) -> f64) -> CMatrix {
    s.apply(f)
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        if !is_finite(&m) {
            return Err(Error::InvalidDensityMatrix("non-finite entries"));
        }
        if hermiticity_defect(&m) > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix("not Hermitian"));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix("trace differs from one"));
        }
        let (values, _) = eigh_raw(&m)?;
        if let Some(&min) = values.first() {
            if min < -PSD_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self(m))
    }

    /// Hermitizes and divides by the trace before validating.
    pub fn normalized(m: CMatrix) -> Result<Self> {
        let h = hermitize(&m);
        let tr = trace(&h).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidDensityMatrix("non-positive trace"));
        }
        Self::new(h / c(tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(identity(d) / c(d as f64))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero vector"));
        }
        let v = psi / c(n);
        Ok(Self(&v * v.adjoint()))
    }

    /// Computational basis state `|k⟩⟨k|`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut m = zeros(d);
        m[(k, k)] = c(1.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn devectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Linear map on `d × d` matrices stored as a `d² × d²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: zeros(dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        devectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    /// `|vec(I)† M|` entrywise maximum; zero for trace-annihilating generators.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d).map(|col| (0..d).map(|i| self.matrix[(i + d * i, col)]).sum::<C64>().norm()).fold(0.0, f64::max)
    }
}

/// Assembles `X ↦ Σ_k L_k X L_k† − ½{L_k†L_k, X}`.
pub fn lindbladian_from_jumps(jumps: &[CMatrix]) -> Result<Superoperator> {
    let d = match jumps.first() {
        Some(l) => check_square(l)?,
        None => return Err(Error::InvalidParameter("empty jump list has no dimension")),
    };
    lindbladian_with_dim(d, jumps)
}

/// As [`lindbladian_from_jumps`] but with an explicit dimension, so an empty
/// jump list yields the zero superoperator.
pub fn lindbladian_with_dim(d: usize, jumps: &[CMatrix]) -> Result<Superoperator> {
    let n = d * d;
    let mut m = zeros(n);
    let mut k_sum = zeros(d);
    for l in jumps {
        if l.nrows() != d || l.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: l.nrows() });
        }
        // conj(L) ⊗ L, skipping zero entries of conj(L).
        for b in 0..d {
            for a in 0..d {
                let s = l[(a, b)].conj();
                if s == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    for i in 0..d {
                        m[(a * d + i, b * d + j)] += s * l[(i, j)];
                    }
                }
            }
        }
        k_sum += l.adjoint() * l;
    }
    let half = c(0.5);
    let kt = k_sum.transpose();
    for b in 0..d {
        for a in 0..d {
            for i in 0..d {
                // I ⊗ K on block (a, a); Kᵀ ⊗ I on the diagonal of block (a, b).
                if a == b {
                    for j in 0..d {
                        m[(a * d + i, a * d + j)] -= half * k_sum[(i, j)];
                    }
                }
                m[(a * d + i, b * d + i)] -= half * kt[(a, b)];
            }
        }
    }
    Ok(Superoperator { dim: d, matrix: m })
}

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let d = check_square(a)?;
    if !is_finite(a) {
        return Err(Error::ExpmFailure("non-finite input"));
    }
    let norm = one_norm(a);
    if norm > 1e12 {
        return Err(Error::ExpmFailure("norm exceeds scaling budget"));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * c(0.5f64.powi(s));
    let b = |k: usize| c(PADE13[k]);
    let id = identity(d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = (&v - &u).lu().solve(&(&v + &u)).ok_or(Error::ExpmFailure("singular Padé denominator"))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !is_finite(&r) {
        return Err(Error::ExpmFailure("overflow while squaring"));
    }
    Ok(r)
}

/// `exp(t·L)` as a superoperator.
pub fn propagator(l: &Superoperator, t: f64) -> Result<Superoperator> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter("evolution time must be non-negative"));
    }
    Ok(Superoperator { dim: l.dim, matrix: expm(&(&l.matrix * c(t)))? })
}

/// Result of [`evolve_with_drift`]: the repaired state and how far the raw
/// output was from Hermitian and unit trace.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: DensityMatrix,
    pub drift: f64,
}

/// Re-Hermitizes and trace-normalizes the output of a channel.
pub fn repair_state(raw: &CMatrix) -> Result<Evolved> {
    let herm = hermiticity_defect(raw);
    let h = hermitize(raw);
    let tr = trace(&h).re;
    let drift = herm.max((tr - 1.0).abs());
    if !(drift <= DRIFT_TOL) {
        return Err(Error::DriftExceeded(drift));
    }
    Ok(Evolved { state: DensityMatrix::new(h / c(tr))?, drift })
}

pub fn evolve_with_drift(l: &Superoperator, sigma: &DensityMatrix, t: f64) -> Result<Evolved> {
    if sigma.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, found: sigma.dim() });
    }
    if t == 0.0 {
        return Ok(Evolved { state: sigma.clone(), drift: 0.0 });
    }
    repair_state(&propagator(l, t)?.apply(sigma.matrix()))
}

/// `e^{tL}(σ)`.
pub fn evolve(l: &Superoperator, sigma: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    evolve_with_drift(l, sigma, t).map(|e| e.state)
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    // The deflation test compares subdiagonals against neighbouring diagonal
    // entries, so exact zero eigenvalues never deflate. Shifting by the 1-norm
    // moves the whole spectrum into Re > 0 first.
    let shift = one_norm(a) + 1.0;
    let shifted = a + identity(n) * c(shift);
    let schur = SCHUR_EPS
        .iter()
        .find_map(|&eps| Schur::try_new(shifted.clone(), eps, 1000 * n))
        .ok_or(Error::EigensolverFailure)?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().map(|z| z - c(shift)).collect())
}

/// Superoperator eigenvalues sorted by decreasing real part.
pub fn superop_spectrum(l: &Superoperator) -> Result<Vec<C64>> {
    let mut ev = eigenvalues(&l.matrix)?;
    ev.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(ev)
}

/// Number of eigenvalues in the kernel band `|μ| <= KERNEL_TOL`.
pub fn kernel_dimension(spectrum: &[C64]) -> usize {
    spectrum.iter().filter(|m| m.norm() <= KERNEL_TOL).count()
}

/// `-max Re μ` over eigenvalues outside the kernel band; zero if none.
pub fn gap_from_spectrum(spectrum: &[C64]) -> f64 {
    let top = spectrum.iter().filter(|m| m.norm() > KERNEL_TOL).map(|m| m.re).fold(f64::NEG_INFINITY, f64::max);
    if top.is_finite() {
        (-top).max(0.0)
    } else {
        0.0
    }
}

pub fn spectral_gap(l: &Superoperator) -> Result<f64> {
    Ok(gap_from_spectrum(&superop_spectrum(l)?))
}

/// Unique fixed point. The kernel vector is found by replacing one equation of
/// `M x = 0` with the trace condition.
pub fn stationary_state(l: &Superoperator) -> Result<DensityMatrix> {
    let kd = kernel_dimension(&superop_spectrum(l)?);
    if kd != 1 {
        return Err(Error::DegenerateKernel(kd));
    }
    stationary_state_unchecked(l)
}

/// As [`stationary_state`] without the kernel-dimension eigensolve.
pub fn stationary_state_unchecked(l: &Superoperator) -> Result<DensityMatrix> {
    let d = l.dim;
    let n = d * d;
    let mut a = l.matrix.clone();
    // Replace the row whose removal loses the least information: the one for
    // entry (0,0), which is determined by the others through the trace.
    let mut rhs = CVector::zeros(n);
    for col in 0..n {
        a[(0, col)] = c(0.0);
    }
    for i in 0..d {
        a[(0, i + d * i)] = c(1.0);
    }
    rhs[0] = c(1.0);
    let x = a.lu().solve(&rhs).ok_or(Error::DegenerateKernel(2))?;
    DensityMatrix::normalized(devectorize(&x, d))
}

/// Singular values of a square complex matrix.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(a.clone(), false, false, EIG_EPS, 1000 * n.max(10)).ok_or(Error::EigensolverFailure)?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    if hermiticity_defect(a) <= HERMITIAN_TOL * max_abs(a).max(1.0) {
        if let Ok((values, _)) = eigh_raw(a) {
            return values.iter().map(|v| v.abs()).sum();
        }
    }
    singular_values(a).map(|s| s.iter().sum()).unwrap_or(f64::NAN)
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    singular_values(a).map(|s| s.iter().copied().fold(0.0, f64::max)).unwrap_or(f64::NAN)
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = eigh_raw(a)?;
    if let Some(&min) = values.first() {
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
    }
    let mut scaled = vectors.clone();
    for (k, v) in values.iter().enumerate() {
        let s = c(v.max(0.0).sqrt());
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= s;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// `F(ρ,σ) = ‖√ρ √σ‖₁`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), found: sigma.nrows() });
    }
    let prod = psd_sqrt(rho)? * psd_sqrt(sigma)?;
    Ok(singular_values(&prod)?.iter().sum())
}

/// `e^{-βH}/Z` through the eigendecomposition, shifted for stability.
pub fn gibbs_state(s: &Spectrum, beta: f64) -> DensityMatrix {
    let lo = s.eigenvalues().first().copied().unwrap_or(0.0);
    let z: f64 =
        s.eigenvalues().iter().zip(s.multiplicities()).map(|(l, &m)| m as f64 * (-beta * (l - lo)).exp()).sum();
    DensityMatrix(hermitize(&s.apply(|l| (-beta * (l - lo)).exp() / z)))
}

//! Model Hamiltonians normalized to spectrum `[0, 1]`, with their couplings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::numerics::{c, eigh_raw, identity, kron, CMatrix, Spectrum, CLUSTER_TOL};
use crate::random::{haar_unitary, random_hermitian, seeded, stream_rng};
use crate::{Error, Result};

/// Largest number of TFIM sites.
pub const MAX_SITES: usize = 6;
const RESAMPLE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Tfim { n1: usize, n2: usize, v: f64 },
    Adversarial { qubits: u32, precision_bits: u32, alpha: f64, seed: u64 },
    RandomDiag { dim: usize, seed: u64, min_gap: f64 },
    Explicit,
}

#[derive(Debug, Clone)]
pub struct Coupling {
    pub name: String,
    pub op: CMatrix,
}

/// A Hamiltonian on `[0, 1]` with its coupling operators.
///
/// The eigendecomposition is computed once at construction. For synthetic
/// spectra it is the exact synthesis data rather than a numerical solve.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    pub kind: ModelKind,
    hamiltonian: CMatrix,
    couplings: Vec<Coupling>,
    scale: f64,
    shift: f64,
    values: Vec<f64>,
    vectors: CMatrix,
    spectrum: Spectrum,
}

impl HamiltonianModel {
    fn from_parts(
        kind: ModelKind,
        values: Vec<f64>,
        vectors: CMatrix,
        couplings: Vec<Coupling>,
        scale: f64,
        shift: f64,
    ) -> Result<Self> {
        let mut scaled = vectors.clone();
        for (k, &l) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(l);
        }
        let hamiltonian = crate::numerics::hermitize(&(scaled * vectors.adjoint()));
        let spectrum = Spectrum::from_eigenpairs(&values, vectors.clone(), CLUSTER_TOL)?;
        Ok(Self { kind, hamiltonian, couplings, scale, shift, values, vectors, spectrum })
    }

    /// Wraps an arbitrary Hermitian matrix, normalizing it to `[0, 1]`.
    pub fn explicit(h: &CMatrix, couplings: Vec<Coupling>) -> Result<Self> {
        let (raw, vectors) = eigh_raw(h)?;
        let (values, scale, shift) = normalize_values(&raw);
        Self::from_parts(ModelKind::Explicit, values, vectors, couplings, scale, shift)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling_ops(&self) -> Vec<CMatrix> {
        self.couplings.iter().map(|c| c.op.clone()).collect()
    }

    /// Factor dividing the raw Hamiltonian (`λ_max − λ_min`).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Raw `λ_min` subtracted before scaling.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Spectrum clustered at the default tolerance.
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn spectrum_with_tol(&self, cluster_tol: f64) -> Result<Spectrum> {
        Spectrum::from_eigenpairs(&self.values, self.vectors.clone(), cluster_tol)
    }

    /// Unclustered ascending eigenvalues.
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.values
    }
}

/// Maps raw eigenvalues affinely onto `[0, 1]`, pinning the extremes exactly.
fn normalize_values(raw: &[f64]) -> (Vec<f64>, f64, f64) {
    let lo = raw.first().copied().unwrap_or(0.0);
    let hi = raw.last().copied().unwrap_or(0.0);
    let scale = hi - lo;
    if !(scale > 0.0) {
        return (vec![0.0; raw.len()], 0.0, lo);
    }
    let n = raw.len();
    let values = raw
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if k == 0 {
                0.0
            } else if k + 1 == n {
                1.0
            } else {
                ((l - lo) / scale).clamp(0.0, 1.0)
            }
        })
        .collect();
    (values, scale, lo)
}

/// `(H − λ_min)/(λ_max − λ_min)` together with the scale and shift; a
/// multiple of the identity maps to zero.
pub fn normalize_spectrum(h: &CMatrix) -> Result<(CMatrix, f64, f64)> {
    let (raw, _) = eigh_raw(h)?;
    let lo = raw.first().copied().unwrap_or(0.0);
    let hi = raw.last().copied().unwrap_or(0.0);
    let d = h.nrows();
    if !(hi - lo > 0.0) {
        return Ok((CMatrix::zeros(d, d), 0.0, lo));
    }
    let m = (h - identity(d) * c(lo)) / c(hi - lo);
    Ok((crate::numerics::hermitize(&m), hi - lo, lo))
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `op` acting on `site` of an `n`-qubit register; site 0 is the most significant.
pub fn site_operator(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    let mut out = identity(1);
    for k in 0..n {
        out = if k == site { kron(&out, op) } else { kron(&out, &identity(2)) };
    }
    out
}

/// Transverse-field Ising model on an open `n1 × n2` grid,
/// `Σ_{⟨i,j⟩} Z_i Z_j + v Σ_i X_i`, with couplings `X_i` and `Z_i`.
pub fn tfim(n1: usize, n2: usize, v: f64) -> Result<HamiltonianModel> {
    let n = n1 * n2;
    if n == 0 || n > MAX_SITES {
        return Err(Error::SizeExceeded("TFIM grid must have between 1 and 6 sites"));
    }
    let x = pauli_x();
    let z = pauli_z();
    let zs: Vec<CMatrix> = (0..n).map(|k| site_operator(&z, k, n)).collect();
    let xs: Vec<CMatrix> = (0..n).map(|k| site_operator(&x, k, n)).collect();
    let d = 1 << n;
    let mut h = CMatrix::zeros(d, d);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let k = i1 * n2 + i2;
            if i2 + 1 < n2 {
                h += &zs[k] * &zs[k + 1];
            }
            if i1 + 1 < n1 {
                h += &zs[k] * &zs[k + n2];
            }
            h += &xs[k] * c(v);
        }
    }
    let (raw, vectors) = eigh_raw(&h)?;
    let (values, scale, shift) = normalize_values(&raw);
    let mut couplings = Vec::with_capacity(2 * n);
    for k in 0..n {
        couplings.push(Coupling { name: format!("X{k}"), op: xs[k].clone() });
        couplings.push(Coupling { name: format!("Z{k}"), op: zs[k].clone() });
    }
    HamiltonianModel::from_parts(ModelKind::Tfim { n1, n2, v }, values, vectors, couplings, scale, shift)
}

/// Seeded random Hermitian coupling scaled to unit operator norm.
pub fn random_coupling<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let s = random_hermitian(d, rng);
    let (vals, _) = eigh_raw(&s).expect("random Hermitian");
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    s / c(norm)
}

/// Spectrum `λ_i = (i + α/2)/2ⁿ`, each level with multiplicity `2^{q−n}`,
/// in a Haar-random eigenbasis, plus one random unit-norm coupling.
pub fn adversarial(qubits: u32, precision_bits: u32, alpha: f64, seed: u64) -> Result<HamiltonianModel> {
    if precision_bits > qubits {
        return Err(Error::PrecisionExceedsDimension { precision_bits, qubits });
    }
    if qubits as usize > MAX_SITES {
        return Err(Error::SizeExceeded("adversarial model limited to 6 qubits"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter("adversariality must lie in [0, 1]"));
    }
    let d = 1usize << qubits;
    let levels = 1usize << precision_bits;
    let mult = d / levels;
    let grid = levels as f64;
    let values: Vec<f64> = (0..d).map(|k| ((k / mult) as f64 + alpha / 2.0) / grid).collect();
    // The basis and coupling depend only on the seed, so sweeping α moves
    // eigenvalues without changing eigenvectors.
    let u = haar_unitary(d, &mut stream_rng(seed, 0));
    let s = random_coupling(d, &mut stream_rng(seed, 1));
    let couplings = vec![Coupling { name: String::from("S"), op: s }];
    let kind = ModelKind::Adversarial { qubits, precision_bits, alpha, seed };
    HamiltonianModel::from_parts(kind, values, u, couplings, 1.0, 0.0)
}

/// `dim` eigenvalues uniform on `[0, 1]`, resampled until consecutive
/// separations are at least `min_gap`, in a Haar-random basis.
pub fn random_diag(dim: usize, seed: u64, min_gap: f64) -> Result<HamiltonianModel> {
    if dim < 2 {
        return Err(Error::InvalidParameter("random_diag needs dim >= 2"));
    }
    if dim > 1 << MAX_SITES {
        return Err(Error::SizeExceeded("random_diag limited to dimension 64"));
    }
    let mut rng = seeded(seed);
    let mut values = Vec::new();
    let mut ok = false;
    for _ in 0..RESAMPLE_BUDGET {
        values = (0..dim).map(|_| rng.random::<f64>()).collect();
        values.sort_by(f64::total_cmp);
        if values.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::ResamplingBudgetExceeded);
    }
    let u = haar_unitary(dim, &mut rng);
    let s = random_coupling(dim, &mut rng);
    let couplings = vec![Coupling { name: String::from("S"), op: s }];
    HamiltonianModel::from_parts(ModelKind::RandomDiag { dim, seed, min_gap }, values, u, couplings, 1.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigh, max_abs, operator_norm, CVector};
    use approx::assert_abs_diff_eq;

    fn check_invariants(m: &HamiltonianModel) {
        let s = eigh(m.hamiltonian(), 1e-9).unwrap();
        assert!(s.eigenvalues().iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
        for cpl in m.couplings() {
            assert!(crate::numerics::hermiticity_defect(&cpl.op) < 1e-14);
            assert!(operator_norm(&cpl.op) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tfim_small_instances() {
        let m = tfim(1, 1, 0.7).unwrap();
        assert_eq!(m.spectrum().eigenvalues(), &[0.0, 1.0]);
        let m = tfim(1, 2, 0.0).unwrap();
        assert_eq!(m.spectrum().eigenvalues(), &[0.0, 1.0]);
        assert_eq!(m.spectrum().multiplicities(), &[2, 2]);
        assert_eq!(m.couplings().len(), 4);
        let m = tfim(2, 2, 1.0).unwrap();
        assert_eq!(m.dim(), 16);
        assert_eq!(m.raw_eigenvalues()[0], 0.0);
        assert_eq!(m.raw_eigenvalues()[15], 1.0);
        check_invariants(&m);
        assert!(matches!(tfim(3, 3, 1.0), Err(Error::SizeExceeded(_))));
    }

    #[test]
    fn tfim_1x2_spectrum_matches_closed_form() {
        // Eigenvalues of Z⊗Z + X⊗I + I⊗X are ±√5 and ±1.
        let m = tfim(1, 2, 1.0).unwrap();
        let s5 = 5f64.sqrt();
        let expected = [0.0, (s5 - 1.0) / (2.0 * s5), (s5 + 1.0) / (2.0 * s5), 1.0];
        for (a, b) in m.spectrum().eigenvalues().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(m.scale(), 2.0 * s5, epsilon = 1e-12);
    }

    #[test]
    fn tfim_is_not_commuting_with_couplings() {
        let m = tfim(1, 3, 0.5).unwrap();
        for cpl in m.couplings() {
            let comm = m.hamiltonian() * &cpl.op - &cpl.op * m.hamiltonian();
            assert!(max_abs(&comm) > 1e-3, "{}", cpl.name);
        }
    }

    #[test]
    fn adversarial_grid() {
        let m = adversarial(4, 3, 0.0, 1).unwrap();
        let s = m.spectrum();
        assert_eq!(s.len(), 8);
        for (i, &l) in s.eigenvalues().iter().enumerate() {
            assert_eq!(l, i as f64 / 8.0);
        }
        assert!(s.multiplicities().iter().all(|&k| k == 2));
        let m = adversarial(4, 3, 1.0, 1).unwrap();
        for (i, &l) in m.spectrum().eigenvalues().iter().enumerate() {
            assert_eq!(l, (i as f64 + 0.5) / 8.0);
        }
        check_invariants(&m);
        let reconstructed = eigh(m.hamiltonian(), 1e-9).unwrap();
        for (a, b) in reconstructed.eigenvalues().iter().zip(m.spectrum().eigenvalues()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
        assert!(adversarial(3, 3, 0.5, 2).unwrap().spectrum().multiplicities().iter().all(|&k| k == 1));
        assert!(matches!(adversarial(2, 3, 0.0, 0), Err(Error::PrecisionExceedsDimension { .. })));
    }

    #[test]
    fn adversarial_basis_independent_of_alpha() {
        let a = adversarial(3, 2, 0.0, 9).unwrap();
        let b = adversarial(3, 2, 0.8, 9).unwrap();
        assert_eq!(a.spectrum().basis(), b.spectrum().basis());
        assert_eq!(a.couplings()[0].op, b.couplings()[0].op);
    }

    #[test]
    fn random_diag_properties() {
        let m = random_diag(2, 3, 0.5).unwrap();
        let l = m.raw_eigenvalues();
        assert!(l[1] - l[0] >= 0.5);
        let a = random_diag(16, 7, 0.0).unwrap();
        let b = random_diag(16, 7, 0.0).unwrap();
        assert_eq!(a.hamiltonian(), b.hamiltonian());
        check_invariants(&a);
        assert_abs_diff_eq!(operator_norm(&a.couplings()[0].op), 1.0, epsilon = 1e-12);
        assert!(matches!(random_diag(10, 1, 0.2), Err(Error::ResamplingBudgetExceeded)));
    }

    #[test]
    fn normalize_examples() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-1.0), c(1.0)]));
        let (n, scale, shift) = normalize_spectrum(&h).unwrap();
        assert_eq!((scale, shift), (2.0, -1.0));
        assert!(max_abs(&(n.clone() - CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0)])))) < 1e-15);
        let (again, s2, sh2) = normalize_spectrum(&n).unwrap();
        assert!(max_abs(&(again - &n)) < 1e-15);
        assert_eq!((s2, sh2), (1.0, 0.0));
        let (z, s, _) = normalize_spectrum(&identity(3)).unwrap();
        assert_eq!(max_abs(&z), 0.0);
        assert_eq!(s, 0.0);
    }
}

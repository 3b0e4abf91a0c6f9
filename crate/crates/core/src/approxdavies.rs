//! Davies generators built from ambiguous phase-estimation amplitudes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::davies::{
    fixed_point_residual, frequency_jumps, to_eigenbasis, Filter, FilterKind, Levels, Lindbladian, Source,
};
use crate::models::{adversarial, HamiltonianModel};
use crate::numerics::{
    c, gibbs_state, kernel_dimension, stationary_state_unchecked, superop_spectrum, trace_norm, CMatrix, Spectrum, C64,
};
use crate::promises::MAX_BITS;
use crate::{Error, Result};

fn check_bits(n: u32) -> Result<usize> {
    if n == 0 || n > MAX_BITS {
        return Err(Error::ParameterOverflow(n));
    }
    Ok(1usize << n)
}

/// `f(λ, x) = 2⁻ⁿ Σ_k e^{2πik(λ − x/2ⁿ)}`.
pub fn qpe_amplitude(lambda: f64, x: usize, n: u32) -> C64 {
    let grid = 1usize << n;
    let phase = 2.0 * PI * (lambda - x as f64 / grid as f64);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..grid {
        let a = phase * k as f64;
        acc += C64::new(a.cos(), a.sin());
    }
    acc / grid as f64
}

/// `|f(λ, x)|²` for every estimate `x`.
pub fn qpe_distribution(lambda: f64, n: u32) -> Vec<f64> {
    (0..1usize << n).map(|x| qpe_amplitude(lambda, x, n).norm_sqr()).collect()
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Distribution of the median of `m_med` independent estimates.
pub fn median_distribution(lambda: f64, n: u32, m_med: usize) -> Result<Vec<f64>> {
    check_bits(n)?;
    if m_med == 0 || m_med.is_multiple_of(2) {
        return Err(Error::InvalidParameter("median count must be odd"));
    }
    let p = qpe_distribution(lambda, n);
    if m_med == 1 {
        return Ok(p);
    }
    let h = m_med / 2;
    // P(median ≤ x) = P(at least h+1 draws ≤ x).
    let at_most = |f: f64| -> f64 {
        let f = f.clamp(0.0, 1.0);
        (h + 1..=m_med).map(|k| binomial(m_med, k) * f.powi(k as i32) * (1.0 - f).powi((m_med - k) as i32)).sum()
    };
    let mut cdf = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(p.len());
    for (x, px) in p.iter().enumerate() {
        cdf += px;
        let g = if x + 1 == p.len() { 1.0 } else { at_most(cdf) };
        out.push((g - prev).max(0.0));
        prev = g;
    }
    Ok(out)
}

/// Per-column amplitudes `w_x` with `A(x) = U diag(w_x) U†`.
fn amplitude_columns(spectrum: &Spectrum, n: u32, m_med: usize) -> Result<Vec<Vec<C64>>> {
    let grid = check_bits(n)?;
    let mut cols = vec![vec![C64::new(0.0, 0.0); spectrum.dim()]; grid];
    for (k, &l) in spectrum.eigenvalues().iter().enumerate() {
        let amps: Vec<C64> = if m_med == 1 {
            (0..grid).map(|x| qpe_amplitude(l, x, n)).collect()
        } else {
            median_distribution(l, n, m_med)?.into_iter().map(|p| c(p.sqrt())).collect()
        };
        for col in spectrum.columns(k) {
            for x in 0..grid {
                cols[x][col] = amps[x];
            }
        }
    }
    Ok(cols)
}

/// `A(x) = Σ_i f(λ_i, x) Π_i`, or `Σ_i √Pr_med(λ_i, x) Π_i` when `m_med > 1`.
pub fn a_operators(spectrum: &Spectrum, n: u32, m_med: usize) -> Result<Vec<CMatrix>> {
    let u = spectrum.basis();
    Ok(amplitude_columns(spectrum, n, m_med)?
        .into_iter()
        .map(|w| {
            let mut scaled = u.clone();
            for (j, wj) in w.iter().enumerate() {
                for i in 0..scaled.nrows() {
                    scaled[(i, j)] *= wj;
                }
            }
            scaled * u.adjoint()
        })
        .collect())
}

/// Generator with jumps `√G(ν) Σ_{x−y=2ⁿν} A(x) S A(y)†` over all `2·2ⁿ − 1` frequencies.
pub fn approx_lindbladian(model: &HamiltonianModel, filter: Filter, n: u32, m_med: usize) -> Result<Lindbladian> {
    if model.couplings().len() != 1 {
        return Err(Error::InvalidParameter("approximate generator takes exactly one coupling"));
    }
    let spectrum = model.spectrum();
    let grid = check_bits(n)?;
    let levels = Levels {
        energies: (0..grid).map(|x| x as f64 / grid as f64).collect(),
        weights: amplitude_columns(spectrum, n, m_med)?,
    };
    let s_eig = to_eigenbasis(spectrum, &model.coupling_ops());
    let jumps = frequency_jumps(spectrum, &s_eig, &levels, &filter, 0.25 / grid as f64, false);
    Lindbladian::from_jumps(model.dim(), jumps, Source::Approx, filter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialRow {
    pub q: u32,
    pub n: u32,
    pub alpha: f64,
    pub m_med: usize,
    pub beta: f64,
    pub seed: u64,
    /// NaN when the kernel is degenerate.
    pub distance: f64,
    pub residual: f64,
    pub kernel_dim: usize,
}

/// One `(α, m_med)` cell: stationary state of the approximate generator
/// against the thermal state of the exact adversarial Hamiltonian.
pub fn adversarial_cell(
    q: u32,
    n: u32,
    alpha: f64,
    m_med: usize,
    beta: f64,
    seed: u64,
    kind: FilterKind,
) -> Result<AdversarialRow> {
    let model = adversarial(q, n, alpha, seed)?;
    let filter = Filter::new(kind, beta)?;
    let l = approx_lindbladian(&model, filter, n, m_med)?;
    let kernel_dim = kernel_dimension(&superop_spectrum(l.superop())?);
    let (distance, residual) = if kernel_dim == 1 {
        let ss = stationary_state_unchecked(l.superop())?;
        let rho = gibbs_state(model.spectrum(), beta);
        (trace_norm(&(ss.matrix() - rho.matrix())), fixed_point_residual(&l, &ss)?)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(AdversarialRow { q, n, alpha, m_med, beta, seed, distance, residual, kernel_dim })
}

/// Every `(α, m_med)` cell, `α` outermost.
pub fn adversarial_sweep(
    q: u32,
    n: u32,
    alphas: &[f64],
    m_meds: &[usize],
    beta: f64,
    seed: u64,
    kind: FilterKind,
) -> Result<Vec<AdversarialRow>> {
    if alphas.is_empty() || m_meds.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be nonempty"));
    }
    let mut rows = Vec::with_capacity(alphas.len() * m_meds.len());
    for &a in alphas {
        for &m in m_meds {
            rows.push(adversarial_cell(q, n, a, m, beta, seed, kind)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::{ideal_davies, BOHR_TOL};
    use crate::models::random_diag;
    use crate::numerics::{identity, max_abs, operator_norm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn qpe_resonance() {
        let n = 4;
        for x in 0..16 {
            let f = qpe_amplitude(5.0 / 16.0, x, n);
            let want = if x == 5 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(f.norm(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn qpe_half_offset() {
        let n = 10;
        let lambda = (300.0 + 0.5) / 1024.0;
        let p = qpe_distribution(lambda, n);
        let want = 4.0 / (PI * PI);
        assert_abs_diff_eq!(p[300], want, epsilon = 1e-5);
        assert_abs_diff_eq!(p[301], want, epsilon = 1e-5);
    }

    #[test]
    fn qpe_normalized() {
        let total: f64 = qpe_distribution(0.317, 5).iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn median_examples() {
        let lambda = 0.317;
        let p1 = median_distribution(lambda, 5, 1).unwrap();
        assert_eq!(p1, qpe_distribution(lambda, 5));
        let point = median_distribution(3.0 / 8.0, 3, 5).unwrap();
        assert_abs_diff_eq!(point[3], 1.0, epsilon = 1e-12);
        let half = (2.0 + 0.5) / 8.0;
        let tail = |p: &[f64]| 1.0 - p[2] - p[3];
        let t1 = tail(&median_distribution(half, 3, 1).unwrap());
        let t5 = tail(&median_distribution(half, 3, 5).unwrap());
        assert!(t5 < t1);
        assert!(median_distribution(0.2, 3, 2).is_err());
    }

    #[test]
    fn median_matches_enumeration() {
        // Brute force over all outcome triples on a 2-bit grid.
        let lambda = 0.37;
        let p = qpe_distribution(lambda, 2);
        let mut want = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut v = [a, b, c];
                    v.sort();
                    want[v[1]] += p[a] * p[b] * p[c];
                }
            }
        }
        let got = median_distribution(lambda, 2, 3).unwrap();
        for x in 0..4 {
            assert_abs_diff_eq!(got[x], want[x], epsilon = 1e-14);
        }
    }

    #[test]
    fn a_operators_complete_and_commuting() {
        let model = random_diag(6, 8, 0.0).unwrap();
        for m in [1, 3] {
            let a = a_operators(model.spectrum(), 3, m).unwrap();
            let sum = a.iter().fold(CMatrix::zeros(6, 6), |acc, x| acc + x.adjoint() * x);
            assert!(max_abs(&(sum - identity(6))) < 1e-8);
            let h = model.spectrum().hamiltonian();
            for x in &a {
                assert!(max_abs(&(x * &h - &h * x)) < 1e-10);
            }
        }
    }

    #[test]
    fn a_operators_resonant_and_ambiguous() {
        let exact = adversarial(4, 3, 0.0, 2).unwrap();
        let a = a_operators(exact.spectrum(), 3, 1).unwrap();
        let s = exact.spectrum();
        for (x, ax) in a.iter().enumerate() {
            let k = s.eigenvalues().iter().position(|&l| (l - x as f64 / 8.0).abs() < 1e-12).unwrap();
            assert!(max_abs(&(ax - &s.projectors()[k])) < 1e-12);
        }
        let amb = adversarial(4, 3, 1.0, 2).unwrap();
        let a = a_operators(amb.spectrum(), 3, 1).unwrap();
        for ax in &a {
            let heavy = amb.spectrum().projectors().iter().filter(|p| operator_norm(&(ax * *p)).powi(2) >= 0.4).count();
            assert!(heavy >= 2);
        }
    }

    #[test]
    fn exact_estimation_matches_ideal() {
        let model = adversarial(4, 3, 0.0, 7).unwrap();
        let f = Filter::metropolis(5.0);
        let approx = approx_lindbladian(&model, f, 3, 1).unwrap();
        assert!(approx.jumps().len() < 2 * 8);
        let ideal = ideal_davies(&model, f, BOHR_TOL).unwrap();
        for j in approx.jumps() {
            let partner = ideal.jumps().iter().find(|i| (i.frequency - j.frequency).abs() < 1e-9);
            let diff = match partner {
                Some(p) => operator_norm(&(&p.op - &j.op)),
                None => operator_norm(&j.op),
            };
            assert!(diff < 1e-9, "ν = {}", j.frequency);
        }
        let row = adversarial_cell(4, 3, 0.0, 3, 5.0, 7, FilterKind::Metropolis).unwrap();
        assert!(row.distance <= 1e-6);
        assert!(row.residual <= 1e-9);
    }

    #[test]
    fn ambiguity_hurts() {
        let rows = adversarial_sweep(4, 3, &[0.0, 1.0], &[1], 5.0, 1, FilterKind::Metropolis).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].distance > rows[0].distance + 0.01);
        assert!(rows[1].residual <= 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn kernels_normalized(lambda in 0.0f64..1.0, n in 1u32..6, h in 0usize..4) {
            let total: f64 = qpe_distribution(lambda, n).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            let med: f64 = median_distribution(lambda, n, 2 * h + 1).unwrap().iter().sum();
            prop_assert!((med - 1.0).abs() < 1e-10);
        }
    }
}

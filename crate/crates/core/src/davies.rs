//! Ideal and promised Davies generators, gaps, mixing times and perturbation checks.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::models::HamiltonianModel;
use crate::numerics::{
    c, evolve, gap_from_spectrum, kernel_dimension, lindbladian_with_dim, max_abs, operator_norm, propagator,
    stationary_state_unchecked, superop_spectrum, trace_norm, CMatrix, DensityMatrix, Spectrum, Superoperator, C64,
};
use crate::promises::{promised_isometry, promised_projectors, Branch, PromiseFamily, RoundingPromise};
use crate::random::{random_density_matrix, random_pure_state, stream_rng};
use crate::specfun::{
    attenuation_exact, attenuation_idealized, attenuation_poly, bit_projector_profiles, interval_projector, Mode,
    SpectralProfile,
};
use crate::{Error, Result};

/// Default tolerance for merging Bohr frequencies.
pub const BOHR_TOL: f64 = 1e-9;
/// Jumps whose eigenbasis entries all fall below this are dropped from ideal generators.
const PRUNE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Metropolis,
    Glauber,
}

/// Filter `G(ω)` with `G(ω)/G(−ω) = e^{−βω}`, so that upward jumps are suppressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filter {
    pub kind: FilterKind,
    pub beta: f64,
}

impl Filter {
    pub fn new(kind: FilterKind, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter("β must be finite and non-negative"));
        }
        Ok(Self { kind, beta })
    }

    pub fn metropolis(beta: f64) -> Self {
        Self { kind: FilterKind::Metropolis, beta }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        filter(self.kind, self.beta, omega)
    }
}

/// Metropolis `min(1, e^{−βω})`, or Glauber-type `e^{−βω/2}` scaled to peak
/// at 1 over Bohr frequencies in `[−1, 1]`.
pub fn filter(kind: FilterKind, beta: f64, omega: f64) -> f64 {
    match kind {
        FilterKind::Metropolis => (-beta * omega).exp().min(1.0),
        FilterKind::Glauber => (-0.5 * beta * (omega + 1.0)).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Ideal,
    Promised,
    Approx,
}

#[derive(Debug, Clone)]
pub struct Jump {
    pub frequency: f64,
    pub coupling: usize,
    pub op: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Lindbladian {
    jumps: Vec<Jump>,
    superop: Superoperator,
    pub source: Source,
    pub filter: Filter,
    pub gamma: Option<f64>,
}

impl Lindbladian {
    pub fn from_jumps(d: usize, jumps: Vec<Jump>, source: Source, filter: Filter) -> Result<Self> {
        let ops: Vec<CMatrix> = jumps.iter().map(|j| j.op.clone()).collect();
        let superop = lindbladian_with_dim(d, &ops)?;
        Ok(Self { jumps, superop, source, filter, gamma: None })
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn superop(&self) -> &Superoperator {
        &self.superop
    }

    pub fn dim(&self) -> usize {
        self.superop.dim()
    }

    /// Generator with every jump compressed to `V† L V`.
    pub fn restricted(&self, v: &CMatrix) -> Result<Superoperator> {
        let ops: Vec<CMatrix> = self.jumps.iter().map(|j| v.adjoint() * &j.op * v).collect();
        lindbladian_with_dim(v.ncols(), &ops)
    }
}

/// Groups sorted values into clusters of consecutive members within `tol`.
/// Returns the cluster id of every input and the cluster means.
fn cluster(values: &[f64], tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ids = vec![0; values.len()];
    let mut centers = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        if pos > 0 && values[k] - values[order[pos - 1]] > tol {
            centers.push(members.iter().sum::<f64>() / members.len() as f64);
            members.clear();
        }
        ids[k] = centers.len();
        members.push(values[k]);
    }
    if !members.is_empty() {
        centers.push(members.iter().sum::<f64>() / members.len() as f64);
    }
    (ids, centers)
}

/// Energy levels used to resolve couplings into frequency components.
/// `weights[x][k]` multiplies eigenbasis column `k` for level `x`.
pub(crate) struct Levels {
    pub(crate) energies: Vec<f64>,
    pub(crate) weights: Vec<Vec<C64>>,
}

/// `L_{ν,α} = √G(ν) Σ_{E_x − E_y = ν} W_x S_α W_y†` with every operator
/// diagonal in the eigenbasis; couplings are given in the eigenbasis.
pub(crate) fn frequency_jumps(
    spectrum: &Spectrum,
    couplings_eig: &[CMatrix],
    levels: &Levels,
    filter: &Filter,
    tol: f64,
    prune: bool,
) -> Vec<Jump> {
    let nl = levels.energies.len();
    let mut diffs = Vec::with_capacity(nl * nl);
    for x in 0..nl {
        for y in 0..nl {
            diffs.push(levels.energies[x] - levels.energies[y]);
        }
    }
    let (ids, freqs) = cluster(&diffs, tol);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); freqs.len()];
    for x in 0..nl {
        for y in 0..nl {
            groups[ids[x * nl + y]].push((x, y));
        }
    }
    let d = spectrum.dim();
    let u = spectrum.basis();
    let mut jumps = Vec::new();
    for (alpha, s) in couplings_eig.iter().enumerate() {
        for (g, pairs) in groups.iter().enumerate() {
            let mut weight = CMatrix::zeros(d, d);
            for &(x, y) in pairs {
                let (wx, wy) = (&levels.weights[x], &levels.weights[y]);
                for j in 0..d {
                    if wy[j] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let right = wy[j].conj();
                    for i in 0..d {
                        weight[(i, j)] += wx[i] * right;
                    }
                }
            }
            let block = s.component_mul(&weight);
            if prune && max_abs(&block) < PRUNE_TOL {
                continue;
            }
            let nu = freqs[g];
            let op = u * block * u.adjoint() * c(filter.eval(nu).sqrt());
            jumps.push(Jump { frequency: nu, coupling: alpha, op });
        }
    }
    jumps
}

pub(crate) fn to_eigenbasis(spectrum: &Spectrum, ops: &[CMatrix]) -> Vec<CMatrix> {
    let u = spectrum.basis();
    ops.iter().map(|s| u.adjoint() * s * u).collect()
}

/// Per-column values of a function of the cluster eigenvalue.
fn column_values(spectrum: &Spectrum, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; spectrum.dim()];
    for (k, &l) in spectrum.eigenvalues().iter().enumerate() {
        let v = f(l);
        for col in spectrum.columns(k) {
            out[col] = v;
        }
    }
    out
}

/// Davies generator with jumps `√G(ω) Σ_{λ_i−λ_j=ω} Π_i S_α Π_j`.
pub fn ideal_davies(model: &HamiltonianModel, filter: Filter, bohr_tol: f64) -> Result<Lindbladian> {
    ideal_davies_on(model.spectrum(), &model.coupling_ops(), filter, bohr_tol)
}

pub fn ideal_davies_on(
    spectrum: &Spectrum,
    couplings: &[CMatrix],
    filter: Filter,
    bohr_tol: f64,
) -> Result<Lindbladian> {
    let levels = Levels {
        energies: spectrum.eigenvalues().to_vec(),
        weights: (0..spectrum.len())
            .map(|x| {
                let mut w = vec![C64::new(0.0, 0.0); spectrum.dim()];
                for col in spectrum.columns(x) {
                    w[col] = c(1.0);
                }
                w
            })
            .collect(),
    };
    let s_eig = to_eigenbasis(spectrum, couplings);
    let jumps = frequency_jumps(spectrum, &s_eig, &levels, &filter, bohr_tol, true);
    Lindbladian::from_jumps(spectrum.dim(), jumps, Source::Ideal, filter)
}

/// Shape of the attenuation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attenuation {
    /// Linear ramps across the margins.
    Linear,
    /// Exact 0/1 plateaus with the polynomial's ramps.
    Idealized,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromisedOptions {
    pub gamma: f64,
    pub delta_leak: f64,
    pub delta_est: f64,
    pub attenuation: Attenuation,
    pub projectors: Mode,
}

impl PromisedOptions {
    pub fn exact(gamma: f64) -> Self {
        Self { gamma, delta_leak: 0.0, delta_est: 0.0, attenuation: Attenuation::Linear, projectors: Mode::Exact }
    }

    pub fn poly(gamma: f64, delta_leak: f64, delta_est: f64) -> Self {
        Self { gamma, delta_leak, delta_est, attenuation: Attenuation::Poly, projectors: Mode::Poly }
    }

    /// Exact reference for a polynomial generator built with the same tolerances.
    pub fn idealized(gamma: f64, delta_leak: f64) -> Self {
        Self { gamma, delta_leak, delta_est: 0.0, attenuation: Attenuation::Idealized, projectors: Mode::Exact }
    }

    pub fn for_mode(mode: Mode, gamma: f64, delta_leak: f64, delta_est: f64) -> Self {
        match mode {
            Mode::Exact => Self::exact(gamma),
            Mode::Poly => Self::poly(gamma, delta_leak, delta_est),
        }
    }
}

pub fn attenuation_for(m: &RoundingPromise, opts: &PromisedOptions) -> Result<SpectralProfile> {
    match opts.attenuation {
        Attenuation::Linear => attenuation_exact(m, opts.gamma),
        Attenuation::Idealized => attenuation_idealized(m, opts.gamma, opts.delta_leak),
        Attenuation::Poly => attenuation_poly(m, opts.gamma, opts.delta_leak),
    }
}

/// Attenuated couplings `A S_α A` for the given options.
pub fn attenuated_couplings(
    model: &HamiltonianModel,
    m: &RoundingPromise,
    opts: &PromisedOptions,
) -> Result<Vec<CMatrix>> {
    let a = attenuation_for(m, opts)?.apply(model.spectrum())?;
    Ok(model.coupling_ops().iter().map(|s| &a * s * &a).collect())
}

/// Promised Davies generator: couplings `A S_α A`, frequencies `m_x − m_y`,
/// jumps `√G(ν) Σ P_x A S_α A P_y`.
pub fn promised_davies(
    model: &HamiltonianModel,
    filter: Filter,
    m: &RoundingPromise,
    opts: &PromisedOptions,
) -> Result<Lindbladian> {
    let spectrum = model.spectrum();
    let profile = attenuation_for(m, opts)?;
    for &l in spectrum.eigenvalues() {
        profile.try_eval(l)?;
    }
    let a = column_values(spectrum, |l| profile.eval(l));
    let s_eig: Vec<CMatrix> = to_eigenbasis(spectrum, &model.coupling_ops())
        .into_iter()
        .map(|s| CMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] * a[i] * a[j]))
        .collect();
    let weights: Vec<Vec<C64>> = match opts.projectors {
        Mode::Exact => (0..m.len())
            .map(|x| {
                column_values(spectrum, |l| if m.locate(l) == Some(x) { 1.0 } else { 0.0 }).into_iter().map(c).collect()
            })
            .collect(),
        Mode::Poly => {
            let bits = bit_projector_profiles(m, opts.delta_est, Mode::Poly)?;
            (0..m.len())
                .map(|x| {
                    let p = interval_projector(&bits, x);
                    column_values(spectrum, |l| p.eval(l)).into_iter().map(c).collect()
                })
                .collect()
        }
    };
    let levels = Levels { energies: m.midpoints(), weights };
    let jumps = frequency_jumps(spectrum, &s_eig, &levels, &filter, 1e-12, false);
    let mut l = Lindbladian::from_jumps(spectrum.dim(), jumps, Source::Promised, filter)?;
    l.gamma = Some(opts.gamma);
    Ok(l)
}

/// `‖L(ρ)‖₁`.
pub fn fixed_point_residual(l: &Lindbladian, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho.dim() });
    }
    Ok(trace_norm(&l.superop().apply(rho.matrix())))
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub gap: f64,
    pub kernel_dim: usize,
    pub stationary: Option<DensityMatrix>,
    pub residual: f64,
}

/// Gap, kernel dimension and fixed point, optionally of the generator
/// compressed onto the columns of `isometry`.
pub fn gap_report(l: &Lindbladian, isometry: Option<&CMatrix>) -> Result<GapReport> {
    let sup = match isometry {
        Some(v) => {
            if v.ncols() == 0 {
                return Err(Error::EmptyPromisedSubspace);
            }
            l.restricted(v)?
        }
        None => l.superop().clone(),
    };
    let ev = superop_spectrum(&sup)?;
    let kernel_dim = kernel_dimension(&ev);
    let gap = gap_from_spectrum(&ev);
    if kernel_dim != 1 {
        return Ok(GapReport { gap, kernel_dim, stationary: None, residual: f64::NAN });
    }
    let local = stationary_state_unchecked(&sup)?;
    let rho = match isometry {
        Some(v) => DensityMatrix::normalized(v * local.matrix() * v.adjoint())?,
        None => local,
    };
    let residual = fixed_point_residual(l, &rho)?;
    Ok(GapReport { gap, kernel_dim, stationary: Some(rho), residual })
}

/// Computational basis states, the maximally mixed state and three seeded
/// random pure states.
pub fn standard_probes(d: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut probes: Vec<DensityMatrix> = (0..d).map(|k| DensityMatrix::basis_state(d, k)).collect();
    probes.push(DensityMatrix::maximally_mixed(d));
    let mut rng = stream_rng(seed, 0x6d6978);
    probes.extend((0..3).map(|_| random_pure_state(d, &mut rng)));
    probes
}

const MIX_START: f64 = 1e-3;
const MIX_LIMIT: f64 = 1e9;
const MIX_BISECTIONS: usize = 20;

/// Smallest `t` on a doubling-then-bisection grid with every probe within
/// `ε` of `target` after evolving for `t`.
pub fn mixing_time(l: &Lindbladian, target: &DensityMatrix, eps: f64, probes: &[DensityMatrix]) -> Result<f64> {
    let worst = |t: f64| -> Result<f64> {
        let prop = propagator(l.superop(), t)?;
        Ok(probes.iter().map(|p| trace_norm(&(prop.apply(p.matrix()) - target.matrix()))).fold(0.0, f64::max))
    };
    if worst(0.0)? <= eps {
        return Ok(0.0);
    }
    if kernel_dimension(&superop_spectrum(l.superop())?) != 1 {
        return Err(Error::NotMixing);
    }
    let mut hi = MIX_START;
    while worst(hi)? > eps {
        hi *= 2.0;
        if hi > MIX_LIMIT {
            return Err(Error::NotMixing);
        }
    }
    let mut lo = if hi > MIX_START { hi / 2.0 } else { 0.0 };
    for _ in 0..MIX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if worst(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone)]
pub struct PerturbationReport {
    /// `max_ν ‖L_ν − L̃_ν‖`.
    pub delta_l: f64,
    /// Number of jumps.
    pub m: usize,
    /// `4mδ_L + 2δ_L²`.
    pub bound: f64,
    pub max_sampled: f64,
    pub samples: usize,
    pub violations: usize,
}

/// Compares two generators with matching jump enumerations on random states.
pub fn jump_perturbation_check(
    l: &Lindbladian,
    lt: &Lindbladian,
    samples: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    if l.jumps().len() != lt.jumps().len() || l.dim() != lt.dim() {
        return Err(Error::EnumerationMismatch);
    }
    let mut delta_l: f64 = 0.0;
    for (a, b) in l.jumps().iter().zip(lt.jumps()) {
        if a.coupling != b.coupling || (a.frequency - b.frequency).abs() > BOHR_TOL {
            return Err(Error::EnumerationMismatch);
        }
        delta_l = delta_l.max(operator_norm(&(&a.op - &b.op)));
    }
    let m = l.jumps().len();
    let bound = 4.0 * m as f64 * delta_l + 2.0 * delta_l * delta_l;
    let diff = Superoperator::from_matrix(l.dim(), l.superop().matrix() - lt.superop().matrix())?;
    let mut rng = stream_rng(seed, 0x6c656d);
    let mut max_sampled: f64 = 0.0;
    let mut violations = 0;
    for k in 0..samples {
        let rho =
            if k % 2 == 0 { random_pure_state(l.dim(), &mut rng) } else { random_density_matrix(l.dim(), &mut rng) };
        let v = trace_norm(&diff.apply(rho.matrix()));
        max_sampled = max_sampled.max(v);
        if v > bound + 1e-12 {
            violations += 1;
        }
    }
    Ok(PerturbationReport { delta_l, m, bound, max_sampled, samples, violations })
}

/// Largest `‖S^(M) − S̃^(M)‖` over paired coupling lists.
pub fn coupling_perturbation_check(s_exact: &[CMatrix], s_poly: &[CMatrix]) -> f64 {
    s_exact.iter().zip(s_poly).map(|(a, b)| operator_norm(&(a - b))).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub branch: Branch,
    pub n: u32,
    pub r: u32,
    pub j: usize,
    pub gamma: f64,
    pub gap: f64,
    pub gap_ideal: f64,
    pub kernel_dim: usize,
    pub residual: f64,
}

impl GapRow {
    pub fn mixing(&self) -> bool {
        self.kernel_dim == 1
    }
}

/// Gap of the promised generator for coarse promise `j` at attenuation `γ`,
/// restricted to the promised subspace.
pub fn gap_cell(
    model: &HamiltonianModel,
    filter: Filter,
    family: &PromiseFamily,
    j: usize,
    gamma: f64,
    gap_ideal: f64,
) -> Result<GapRow> {
    let m = family.coarse.get(j).ok_or(Error::IndexOutOfRange { index: j, len: family.size() })?;
    let l = promised_davies(model, filter, m, &PromisedOptions::exact(gamma))?;
    let v = promised_isometry(model.spectrum(), m);
    let report = gap_report(&l, Some(&v))?;
    Ok(GapRow {
        branch: family.branch,
        n: family.n,
        r: family.r,
        j,
        gamma,
        gap: report.gap,
        gap_ideal,
        kernel_dim: report.kernel_dim,
        residual: report.residual,
    })
}

/// Every `(j, γ)` cell in index order.
pub fn gap_sweep(
    model: &HamiltonianModel,
    filter: Filter,
    family: &PromiseFamily,
    gamma_grid: &[f64],
) -> Result<Vec<GapRow>> {
    let gap_ideal = spectral_gap_of(&ideal_davies(model, filter, BOHR_TOL)?)?;
    let mut rows = Vec::new();
    for j in 0..family.size() {
        for &g in gamma_grid {
            rows.push(gap_cell(model, filter, family, j, g, gap_ideal)?);
        }
    }
    Ok(rows)
}

pub fn spectral_gap_of(l: &Lindbladian) -> Result<f64> {
    crate::numerics::spectral_gap(l.superop())
}

/// Query counts with every implied constant set to 1 ("constant-1 convention").
/// The `*_prefactor` fields omit the polylogarithmic factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceEstimate {
    /// `γ⁻¹ n² 2^{3n+r} t`.
    pub h_queries_prefactor: f64,
    /// `t γ⁻¹ β³ ε⁻⁷ log²(β/ε)`.
    pub thm_queries_prefactor: f64,
    /// `log₂(t/δ_L)`, floored at 1.
    pub polylog: f64,
    pub h_queries: f64,
    pub thm_queries: f64,
    /// `log₂(β (ε/2)⁻²)`.
    pub n_choice: f64,
    /// `log₂(4/ε)`.
    pub r_choice: f64,
}

pub fn resource_estimate(
    n: u32,
    r: u32,
    gamma: f64,
    t: f64,
    delta_l: f64,
    beta: f64,
    eps: f64,
) -> Result<ResourceEstimate> {
    if !(gamma > 0.0 && t > 0.0 && delta_l > 0.0 && beta > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter("resource estimate needs positive parameters"));
    }
    let polylog = (t / delta_l).log2().max(1.0);
    let nf = n as f64;
    let h = nf * nf * 2f64.powi((3 * n + r) as i32) * t / gamma;
    let log_be = (beta / eps).log2().max(1.0);
    let thm = t / gamma * beta.powi(3) * eps.powi(-7) * log_be * log_be;
    Ok(ResourceEstimate {
        h_queries_prefactor: h,
        thm_queries_prefactor: thm,
        polylog,
        h_queries: h * polylog,
        thm_queries: thm * polylog,
        n_choice: (beta * (eps / 2.0).powi(-2)).log2(),
        r_choice: (4.0 / eps).log2(),
    })
}

/// Evolves `σ` under `L` and reports the trace distance to `target`.
pub fn distance_after(l: &Lindbladian, sigma: &DensityMatrix, t: f64, target: &DensityMatrix) -> Result<f64> {
    Ok(trace_norm(&(evolve(l.superop(), sigma, t)?.matrix() - target.matrix())))
}

/// Random state on the range of `p` (used for confinement checks).
pub fn random_supported_state<R: Rng + ?Sized>(p: &CMatrix, rng: &mut R) -> Option<DensityMatrix> {
    crate::random::random_state_on(p, rng)
}

/// `Tr(σ (I − P))`.
pub fn leakage(sigma: &DensityMatrix, p: &CMatrix) -> f64 {
    let d = p.nrows();
    crate::numerics::trace(&(sigma.matrix() * (crate::numerics::identity(d) - p))).re
}

/// Exact promised projector for convenience in callers.
pub fn promised_projector(spectrum: &Spectrum, m: &RoundingPromise) -> CMatrix {
    promised_projectors(spectrum, m).total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_diag, tfim};
    use crate::numerics::{gibbs_state, spectral_gap, stationary_state};
    use crate::promises::PromiseFamily;
    use crate::protocol::promised_gibbs;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn filter_examples() {
        for w in [-1.0, -0.3, 0.0, 0.4, 1.0] {
            assert_eq!(filter(FilterKind::Metropolis, 0.0, w), 1.0);
            assert_eq!(filter(FilterKind::Glauber, 0.0, w), 1.0);
        }
        assert_abs_diff_eq!(filter(FilterKind::Metropolis, 2.0, 0.5), (-1.0f64).exp(), epsilon = 1e-15);
        for kind in [FilterKind::Metropolis, FilterKind::Glauber] {
            for k in -20..=20 {
                let w = k as f64 / 20.0;
                let g = filter(kind, 3.0, w);
                assert!(g > 0.0 && g <= 1.0);
                assert_abs_diff_eq!(g * (3.0 * w).exp(), filter(kind, 3.0, -w), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cluster_groups_close_values() {
        let (ids, centers) = cluster(&[0.5, 0.1, 0.1 + 1e-12, 0.3], 1e-9);
        assert_eq!(ids, vec![2, 0, 0, 1]);
        assert_eq!(centers.len(), 3);
    }

    #[test]
    fn ideal_fixed_point_tfim_1x2() {
        let model = tfim(1, 2, 1.0).unwrap();
        for kind in [FilterKind::Metropolis, FilterKind::Glauber] {
            let l = ideal_davies(&model, Filter::new(kind, 1.0).unwrap(), BOHR_TOL).unwrap();
            let rho = gibbs_state(model.spectrum(), 1.0);
            assert!(fixed_point_residual(&l, &rho).unwrap() <= 1e-9);
            let ss = stationary_state(l.superop()).unwrap();
            assert!(trace_norm(&(ss.matrix() - rho.matrix())) <= 1e-9);
            assert!(l.jumps().iter().all(|j| operator_norm(&j.op) <= 1.0 + 1e-9));
            let mixed = DensityMatrix::maximally_mixed(4);
            assert!(fixed_point_residual(&l, &mixed).unwrap() > 1e-3);
        }
    }

    #[test]
    fn infinite_temperature_is_unital() {
        let model = random_diag(5, 3, 0.0).unwrap();
        let l = ideal_davies(&model, Filter::metropolis(0.0), BOHR_TOL).unwrap();
        let ss = stationary_state(l.superop()).unwrap();
        assert!(trace_norm(&(ss.matrix() - DensityMatrix::maximally_mixed(5).matrix())) < 1e-9);
    }

    #[test]
    fn diagonal_coupling_only_dephases() {
        let h = CMatrix::from_diagonal(&crate::numerics::CVector::from_vec(vec![c(0.0), c(0.5), c(1.0)]));
        let s = CMatrix::from_diagonal(&crate::numerics::CVector::from_vec(vec![c(1.0), c(-0.5), c(0.2)]));
        let model = HamiltonianModel::explicit(&h, vec![crate::models::Coupling { name: "S".into(), op: s }]).unwrap();
        let l = ideal_davies(&model, Filter::metropolis(2.0), BOHR_TOL).unwrap();
        assert!(l.jumps().iter().all(|j| j.frequency == 0.0));
        let diag = DensityMatrix::new(CMatrix::from_diagonal(&crate::numerics::CVector::from_vec(vec![
            c(0.2),
            c(0.3),
            c(0.5),
        ])))
        .unwrap();
        assert!(fixed_point_residual(&l, &diag).unwrap() < 1e-14);
    }

    #[test]
    fn adjoint_pairing() {
        let model = tfim(1, 2, 0.8).unwrap();
        let f = Filter::metropolis(2.0);
        let l = ideal_davies(&model, f, BOHR_TOL).unwrap();
        for a in l.jumps() {
            let partner = l
                .jumps()
                .iter()
                .find(|b| b.coupling == a.coupling && (b.frequency + a.frequency).abs() < 1e-9)
                .expect("partner jump");
            let ratio = (f.eval(-a.frequency) / f.eval(a.frequency)).sqrt();
            assert!(max_abs(&(&partner.op - a.op.adjoint() * c(ratio))) < 1e-10);
        }
    }

    #[test]
    fn promised_single_interval_is_uniform() {
        let model = tfim(1, 2, 1.0).unwrap();
        let m = RoundingPromise::full();
        let l = promised_davies(&model, Filter::metropolis(3.0), &m, &PromisedOptions::exact(0.0)).unwrap();
        assert!(l.jumps().iter().all(|j| j.frequency == 0.0));
        let report = gap_report(&l, None).unwrap();
        assert_eq!(report.kernel_dim, 1);
        let ss = report.stationary.unwrap();
        assert!(trace_norm(&(ss.matrix() - DensityMatrix::maximally_mixed(4).matrix())) < 1e-9);
    }

    #[test]
    fn promised_fixed_point_and_confinement() {
        let model = tfim(1, 2, 1.0).unwrap();
        let f = Filter::metropolis(1.0);
        let fam = PromiseFamily::new(2, 1, Branch::L).unwrap();
        let mut rng = crate::random::seeded(5);
        for m in &fam.coarse {
            let l = promised_davies(&model, f, m, &PromisedOptions::exact(0.05)).unwrap();
            let target = promised_gibbs(model.spectrum(), m, 1.0).unwrap();
            assert!(fixed_point_residual(&l, &target).unwrap() <= 1e-9);
            let p = promised_projector(model.spectrum(), m);
            if let Some(sigma) = random_supported_state(&p, &mut rng) {
                for t in [0.1, 1.0, 10.0] {
                    let out = evolve(l.superop(), &sigma, t).unwrap();
                    assert!(leakage(&out, &p).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn exact_and_poly_enumerations_match() {
        let model = tfim(1, 2, 1.0).unwrap();
        let f = Filter::metropolis(1.0);
        let m = &PromiseFamily::new(2, 1, Branch::R).unwrap().coarse[1];
        let exact = promised_davies(&model, f, m, &PromisedOptions::idealized(0.25, 1e-4)).unwrap();
        let poly = promised_davies(&model, f, m, &PromisedOptions::poly(0.25, 1e-4, 1e-4)).unwrap();
        let rep = jump_perturbation_check(&exact, &poly, 20, 1).unwrap();
        assert_eq!(rep.violations, 0);
        let s = m.len() as f64;
        assert!(rep.delta_l <= s * s * (2.0 * 1e-4 + 2.0 * 1e-4));
    }

    #[test]
    fn perturbation_examples() {
        let model = tfim(1, 2, 1.0).unwrap();
        let l = ideal_davies(&model, Filter::metropolis(1.0), BOHR_TOL).unwrap();
        let same = jump_perturbation_check(&l, &l, 10, 0).unwrap();
        assert_eq!(same.delta_l, 0.0);
        assert_eq!(same.max_sampled, 0.0);
        let scaled: Vec<Jump> = l.jumps().iter().map(|j| Jump { op: &j.op * c(1.0 - 1e-3), ..j.clone() }).collect();
        let lt = Lindbladian::from_jumps(4, scaled, Source::Ideal, l.filter).unwrap();
        let rep = jump_perturbation_check(&l, &lt, 50, 0).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_sampled > 0.0);
        let short = Lindbladian::from_jumps(4, l.jumps()[1..].to_vec(), Source::Ideal, l.filter).unwrap();
        assert!(matches!(jump_perturbation_check(&l, &short, 1, 0), Err(Error::EnumerationMismatch)));
    }

    #[test]
    fn coupling_perturbation_identity_case() {
        let model = random_diag(8, 2, 0.0).unwrap();
        let m = &PromiseFamily::new(2, 1, Branch::L).unwrap().coarse[0];
        let delta = 1e-4;
        let a = attenuation_idealized(m, 0.25, delta).unwrap().apply(model.spectrum()).unwrap();
        let at = attenuation_poly(m, 0.25, delta).unwrap().apply(model.spectrum()).unwrap();
        let diff = coupling_perturbation_check(&[&a * &a], &[&at * &at]);
        assert!(diff <= 2.0 * delta);
        let se = attenuated_couplings(&model, m, &PromisedOptions::idealized(0.25, delta)).unwrap();
        let sp = attenuated_couplings(&model, m, &PromisedOptions::poly(0.25, delta, delta)).unwrap();
        assert!(coupling_perturbation_check(&se, &sp) <= 2.0 * delta);
    }

    #[test]
    fn mixing_time_examples() {
        let mut lower = CMatrix::zeros(2, 2);
        lower[(0, 1)] = c(1.0);
        let sup = crate::numerics::lindbladian_from_jumps(&[lower.clone()]).unwrap();
        let l = Lindbladian::from_jumps(
            2,
            vec![Jump { frequency: -1.0, coupling: 0, op: lower }],
            Source::Ideal,
            Filter::metropolis(1.0),
        )
        .unwrap();
        assert_eq!(l.superop(), &sup);
        let target = DensityMatrix::basis_state(2, 0);
        let probe = [DensityMatrix::basis_state(2, 1)];
        assert_eq!(mixing_time(&l, &target, 2.0, &probe).unwrap(), 0.0);
        // ‖e^{tL}(|1⟩⟨1|) − |0⟩⟨0|‖₁ = 2e^{−t}.
        let eps = 0.1;
        let t = mixing_time(&l, &target, eps, &probe).unwrap();
        assert_abs_diff_eq!(t, (2.0 / eps).ln(), epsilon = 1e-4);
        let zero = Lindbladian::from_jumps(2, Vec::new(), Source::Ideal, Filter::metropolis(1.0)).unwrap();
        assert!(matches!(mixing_time(&zero, &target, eps, &probe), Err(Error::NotMixing)));
    }

    #[test]
    fn mixing_time_tracks_gap() {
        let model = tfim(1, 2, 1.0).unwrap();
        let l = ideal_davies(&model, Filter::metropolis(1.0), BOHR_TOL).unwrap();
        let gap = spectral_gap(l.superop()).unwrap();
        let target = gibbs_state(model.spectrum(), 1.0);
        let t = mixing_time(&l, &target, 1e-2, &standard_probes(4, 1)).unwrap();
        assert!((0.1..=100.0).contains(&(t * gap)));
    }

    #[test]
    fn gap_sweep_small() {
        let model = tfim(1, 2, 1.0).unwrap();
        let fam = PromiseFamily::new(2, 1, Branch::R).unwrap();
        let rows = gap_sweep(&model, Filter::metropolis(2.0), &fam, &[0.0, 0.01, 0.3]).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.gap_ideal > 0.0));
    }

    #[test]
    fn resource_examples() {
        let a = resource_estimate(4, 3, 0.1, 10.0, 1e-3, 1.0, 0.5).unwrap();
        let b = resource_estimate(4, 3, 0.1, 20.0, 1e-3, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(b.h_queries_prefactor, 2.0 * a.h_queries_prefactor, epsilon = 1e-6);
        assert_abs_diff_eq!(b.thm_queries_prefactor, 2.0 * a.thm_queries_prefactor, epsilon = 1e-6);
        assert_abs_diff_eq!(a.n_choice, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.r_choice, 3.0, epsilon = 1e-12);
        let c2 = resource_estimate(4, 3, 0.05, 10.0, 1e-3, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(c2.h_queries, 2.0 * a.h_queries, epsilon = 1e-6);
        assert!(resource_estimate(4, 3, 0.0, 1.0, 1e-3, 1.0, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn ideal_generators_are_valid(seed in 0u64..1000, dim in 2usize..7, beta in 0.0f64..10.0) {
            let model = random_diag(dim, seed, 0.0).unwrap();
            let l = ideal_davies(&model, Filter::metropolis(beta), BOHR_TOL).unwrap();
            prop_assert!(l.superop().trace_defect() < 1e-8);
            let rho = gibbs_state(model.spectrum(), beta);
            prop_assert!(fixed_point_residual(&l, &rho).unwrap() < 1e-9);
            for j in l.jumps() {
                prop_assert!(operator_norm(&j.op) <= 1.0 + 1e-9);
            }
        }
    }
}

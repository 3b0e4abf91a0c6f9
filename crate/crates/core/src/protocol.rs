//! Left-right POVM, majority selection, promised Gibbs states and the ensemble protocol.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::davies::{gap_report, promised_davies, Filter, PromisedOptions};
use crate::models::HamiltonianModel;
use crate::numerics::{
    eigh, evolve, fidelity, gibbs_state, hermitize, identity, operator_norm, trace, trace_norm, CMatrix, DensityMatrix,
    Spectrum, CLUSTER_TOL,
};
use crate::promises::{exclusion_count, promised_isometry, Branch, PromiseFamily, RoundingPromise};
use crate::random::{random_density_matrix, stream_rng};
use crate::specfun::{lr_profile, Mode};
use crate::{Error, Result};

/// Slack allowed on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-12;

fn weighted_state(spectrum: &Spectrum, weight: impl Fn(f64) -> Option<f64>) -> Result<DensityMatrix> {
    let energies: Vec<f64> = spectrum.eigenvalues().iter().filter_map(|&l| weight(l)).collect();
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return Err(Error::EmptyPromisedSubspace);
    }
    let unnormalized = spectrum.apply(|l| weight(l).map_or(0.0, |e| (-(e - lo)).exp()));
    DensityMatrix::normalized(hermitize(&unnormalized))
}

/// `ρ_β^(M) ∝ Σ_x e^{−β m_x} P_x`.
pub fn promised_gibbs(spectrum: &Spectrum, m: &RoundingPromise, beta: f64) -> Result<DensityMatrix> {
    let mids = m.midpoints();
    weighted_state(spectrum, |l| m.locate(l).map(|x| beta * mids[x]))
}

/// `ρ̂_β^(M) ∝ Σ_{λ_i ∈ M} e^{−βλ_i} Π_i`.
pub fn exact_promised_gibbs(spectrum: &Spectrum, m: &RoundingPromise, beta: f64) -> Result<DensityMatrix> {
    weighted_state(spectrum, |l| m.contains(l).then_some(beta * l))
}

/// `Ẑ_β^(M)` and `Z_β`, both relative to the same ground energy.
pub fn partition_functions(spectrum: &Spectrum, m: &RoundingPromise, beta: f64) -> (f64, f64) {
    let lo = spectrum.eigenvalues().first().copied().unwrap_or(0.0);
    let mut z_hat = 0.0;
    let mut z = 0.0;
    for (&l, &k) in spectrum.eigenvalues().iter().zip(spectrum.multiplicities()) {
        let w = k as f64 * (-beta * (l - lo)).exp();
        z += w;
        if m.contains(l) {
            z_hat += w;
        }
    }
    (z_hat, z)
}

/// `Tr(σ P^(M))`.
pub fn approx_support(sigma: &DensityMatrix, m: &RoundingPromise, spectrum: &Spectrum) -> f64 {
    let p = spectrum.apply(|l| if m.contains(l) { 1.0 } else { 0.0 });
    trace(&(sigma.matrix() * p)).re
}

#[derive(Debug, Clone)]
pub struct PovmOutcome {
    pub label: Branch,
    /// Probability conditioned on postselection success.
    pub probability: f64,
    /// Probability before postselection, `Tr(Kσ K)`.
    pub unnormalized: f64,
    /// `None` when the outcome has vanishing probability.
    pub post_state: Option<DensityMatrix>,
    pub success_probability: f64,
}

#[derive(Debug, Clone)]
pub struct PovmResult {
    pub success_probability: f64,
    pub left: PovmOutcome,
    pub right: PovmOutcome,
}

impl PovmResult {
    pub fn outcome(&self, b: Branch) -> &PovmOutcome {
        match b {
            Branch::L => &self.left,
            Branch::R => &self.right,
        }
    }
}

/// `P = p_LR(H)` evaluated once for repeated measurements.
#[derive(Debug, Clone)]
pub struct LeftRightPovm {
    p2: CMatrix,
    q2: CMatrix,
}

impl LeftRightPovm {
    pub fn new(spectrum: &Spectrum, n: u32, r: u32, delta_sup: f64, mode: Mode) -> Result<Self> {
        let p = lr_profile(n, r, delta_sup, mode)?.apply(spectrum)?;
        let p2 = &p * &p;
        let q2 = identity(spectrum.dim()) - &p2;
        Ok(Self { p2, q2 })
    }

    pub fn measure(&self, sigma: &DensityMatrix) -> Result<PovmResult> {
        let branch = |k: &CMatrix| -> (f64, CMatrix) {
            let out = hermitize(&(k * sigma.matrix() * k));
            (trace(&out).re.max(0.0), out)
        };
        let (pl, ml) = branch(&self.p2);
        let (pr, mr) = branch(&self.q2);
        let success = pl + pr;
        let make = |label, p: f64, m: CMatrix| -> Result<PovmOutcome> {
            let post_state = if p > 1e-300 { Some(DensityMatrix::normalized(m)?) } else { None };
            Ok(PovmOutcome {
                label,
                probability: p / success,
                unnormalized: p,
                post_state,
                success_probability: success,
            })
        };
        Ok(PovmResult { success_probability: success, left: make(Branch::L, pl, ml)?, right: make(Branch::R, pr, mr)? })
    }
}

/// Postselected two-outcome measurement with Kraus pair `P²`, `I − P²`.
/// The `P²` outcome is labeled `L`.
pub fn left_right_povm(
    sigma: &DensityMatrix,
    spectrum: &Spectrum,
    n: u32,
    r: u32,
    delta_sup: f64,
    mode: Mode,
) -> Result<PovmResult> {
    LeftRightPovm::new(spectrum, n, r, delta_sup, mode)?.measure(sigma)
}

/// Smallest odd integer strictly above `20 ln(1/δ_fail)`.
pub fn majority_trials(delta_fail: f64) -> Result<usize> {
    if !(delta_fail > 0.0 && delta_fail < 0.5) {
        return Err(Error::InvalidParameter("δ_fail must lie in (0, 1/2)"));
    }
    let x = 20.0 * (1.0 / delta_fail).ln();
    let mut n = x.floor() as usize + 1;
    if n.is_multiple_of(2) {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone)]
pub struct MajorityOutcome {
    pub branch: Branch,
    pub post_state: DensityMatrix,
    pub trials: usize,
    pub count: usize,
}

impl MajorityOutcome {
    pub fn frequency(&self) -> f64 {
        self.count as f64 / self.trials as f64
    }
}

/// Runs the postselected POVM on `N` fresh states and keeps the most frequent label.
pub fn majority_select<R: Rng + ?Sized>(
    prepare: &mut dyn FnMut(&mut R) -> DensityMatrix,
    povm: &LeftRightPovm,
    delta_fail: f64,
    rng: &mut R,
) -> Result<MajorityOutcome> {
    let trials = majority_trials(delta_fail)?;
    let mut first: [Option<DensityMatrix>; 2] = [None, None];
    let mut left = 0;
    for _ in 0..trials {
        let sigma = prepare(rng);
        let res = povm.measure(&sigma)?;
        let u: f64 = rng.random();
        let (slot, outcome) = if u < res.left.probability { (0, &res.left) } else { (1, &res.right) };
        if slot == 0 {
            left += 1;
        }
        if first[slot].is_none() {
            first[slot] = outcome.post_state.clone();
        }
    }
    let (branch, count, slot) = if 2 * left > trials { (Branch::L, left, 0) } else { (Branch::R, trials - left, 1) };
    let post_state = first[slot].take().ok_or(Error::InvalidDensityMatrix("majority outcome without post-state"))?;
    Ok(MajorityOutcome { branch, post_state, trials, count })
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub branch: Branch,
    pub n: u32,
    pub r: u32,
    pub beta: f64,
    pub promised: Vec<DensityMatrix>,
    pub exact: Vec<DensityMatrix>,
    pub average: DensityMatrix,
    pub exact_average: DensityMatrix,
    /// `‖ρ* − ρ_β‖₁`.
    pub dist_avg: f64,
    /// `‖ρ̂* − ρ_β‖₁`.
    pub dist_exact_avg: f64,
    /// `‖ρ̂* − ρ*‖₁`.
    pub dist_rounding: f64,
    /// `√(β2⁻ⁿ)`.
    pub bound_rounding: f64,
    /// `2·2⁻ʳ`.
    pub bound_exclusion: f64,
    pub bound_thm: f64,
    /// Per-`j` fidelity `F(ρ̂^(M_j), ρ^(M_j))` and its lower bound `e^{−β2⁻ⁿ}`.
    pub min_fidelity: f64,
    pub fidelity_bound: f64,
    pub max_exclusions: usize,
    pub partition_ok: bool,
    pub violations: usize,
}

pub fn ensemble_bounds(n: u32, r: u32, beta: f64) -> (f64, f64) {
    ((beta * 2f64.powi(-(n as i32))).sqrt(), 2.0 * 2f64.powi(-(r as i32)))
}

fn mean_state(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let d = states[0].dim();
    let sum = states.iter().fold(CMatrix::zeros(d, d), |acc, s| acc + s.matrix());
    DensityMatrix::normalized(sum)
}

/// Builds every promised and exact-promised Gibbs state of a family and checks
/// the rounding, exclusion and combined ensemble bounds.
pub fn ensemble_report(spectrum: &Spectrum, family: &PromiseFamily, beta: f64) -> Result<EnsembleReport> {
    let promised = family.coarse.iter().map(|m| promised_gibbs(spectrum, m, beta)).collect::<Result<Vec<_>>>()?;
    let exact = family.coarse.iter().map(|m| exact_promised_gibbs(spectrum, m, beta)).collect::<Result<Vec<_>>>()?;
    let rho = gibbs_state(spectrum, beta);
    let average = mean_state(&promised)?;
    let exact_average = mean_state(&exact)?;
    let dist_avg = trace_norm(&(average.matrix() - rho.matrix()));
    let dist_exact_avg = trace_norm(&(exact_average.matrix() - rho.matrix()));
    let dist_rounding = trace_norm(&(exact_average.matrix() - average.matrix()));
    let (bound_rounding, bound_exclusion) = ensemble_bounds(family.n, family.r, beta);
    let bound_thm = bound_rounding + bound_exclusion;
    let fidelity_bound = (-beta * 2f64.powi(-(family.n as i32))).exp();
    let mut min_fidelity = f64::INFINITY;
    for (a, b) in exact.iter().zip(&promised) {
        min_fidelity = min_fidelity.min(fidelity(a.matrix(), b.matrix())?);
    }
    let max_exclusions = spectrum.eigenvalues().iter().map(|&l| exclusion_count(l, family)).max().unwrap_or(0);
    let partition_ok = family.coarse.iter().all(|m| {
        let (z_hat, z) = partition_functions(spectrum, m, beta);
        z_hat <= z * (1.0 + BOUND_SLACK)
    });
    let checks = [
        dist_rounding <= bound_rounding + BOUND_SLACK,
        dist_exact_avg <= bound_exclusion + BOUND_SLACK,
        dist_avg <= bound_thm + BOUND_SLACK,
        min_fidelity >= fidelity_bound - 1e-10,
        max_exclusions <= 1,
        partition_ok,
    ];
    let violations = checks.iter().filter(|ok| !**ok).count();
    Ok(EnsembleReport {
        branch: family.branch,
        n: family.n,
        r: family.r,
        beta,
        promised,
        exact,
        average,
        exact_average,
        dist_avg,
        dist_exact_avg,
        dist_rounding,
        bound_rounding,
        bound_exclusion,
        bound_thm,
        min_fidelity,
        fidelity_bound,
        max_exclusions,
        partition_ok,
        violations,
    })
}

/// `F(ρ_β(H₁), ρ_β(H₂))` and `e^{−β‖H₁ − H₂‖}`.
pub fn fidelity_bound_check(h1: &CMatrix, h2: &CMatrix, beta: f64) -> Result<(f64, f64)> {
    if h1.shape() != h2.shape() {
        return Err(Error::DimensionMismatch { expected: h1.nrows(), found: h2.nrows() });
    }
    let r1 = gibbs_state(&eigh(h1, CLUSTER_TOL)?, beta);
    let r2 = gibbs_state(&eigh(h2, CLUSTER_TOL)?, beta);
    let f = fidelity(r1.matrix(), r2.matrix())?;
    Ok((f, (-beta * operator_norm(&(h1 - h2))).exp()))
}

/// Evolution time for the end-to-end run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimePolicy {
    Fixed(f64),
    /// `t = c / min_j Δ_j` over the selected family.
    GapMultiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndToEndOptions {
    pub n: u32,
    pub r: u32,
    pub beta: f64,
    pub gamma: f64,
    pub time: TimePolicy,
    pub povm_mode: Mode,
    pub delta_sup: f64,
    pub delta_fail: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EndToEndReport {
    pub branch: Branch,
    pub majority_frequency: f64,
    pub sampled_j: usize,
    pub t: f64,
    pub min_gap: f64,
    /// `‖2⁻ʳ Σ_j e^{tL^(M_j)}(σ̃) − ρ_β‖₁`.
    pub distance: f64,
    /// Distance of the single sampled run's output.
    pub sampled_distance: f64,
    pub bound: f64,
    /// `max_j ‖e^{tL^(M_j)}(σ̃) − ρ_β^(M_j)‖₁`.
    pub eps_mix: f64,
    /// Post-measurement input `σ̃`.
    pub input: DensityMatrix,
    pub output: DensityMatrix,
}

/// Majority-selected POVM branch, uniform `j`, then evolution under the promised generator.
/// Input states are fresh copies of one seeded random density matrix.
pub fn end_to_end(model: &HamiltonianModel, filter: Filter, opts: &EndToEndOptions) -> Result<EndToEndReport> {
    let spectrum = model.spectrum();
    let d = model.dim();
    let mut rng = stream_rng(opts.seed, 0x65326500);
    let source = random_density_matrix(d, &mut rng);
    let povm = LeftRightPovm::new(spectrum, opts.n, opts.r, opts.delta_sup, opts.povm_mode)?;
    let mut prepare = |_: &mut _| source.clone();
    let sel = majority_select(&mut prepare, &povm, opts.delta_fail, &mut rng)?;
    let family = PromiseFamily::new(opts.n, opts.r, sel.branch)?;
    let sampled_j = rng.random_range(0..family.size());
    let gens = family
        .coarse
        .iter()
        .map(|m| promised_davies(model, filter, m, &PromisedOptions::exact(opts.gamma)))
        .collect::<Result<Vec<_>>>()?;
    let mut min_gap = f64::INFINITY;
    for (l, m) in gens.iter().zip(&family.coarse) {
        let rep = gap_report(l, Some(&promised_isometry(spectrum, m)))?;
        if rep.kernel_dim != 1 {
            return Err(Error::NotMixing);
        }
        min_gap = min_gap.min(rep.gap);
    }
    let t = match opts.time {
        TimePolicy::Fixed(t) => t,
        TimePolicy::GapMultiple(c) => c / min_gap,
    };
    let rho = gibbs_state(spectrum, opts.beta);
    let mut outputs = Vec::with_capacity(gens.len());
    let mut eps_mix: f64 = 0.0;
    for (l, m) in gens.iter().zip(&family.coarse) {
        let out = evolve(l.superop(), &sel.post_state, t)?;
        eps_mix = eps_mix.max(trace_norm(&(out.matrix() - promised_gibbs(spectrum, m, opts.beta)?.matrix())));
        outputs.push(out);
    }
    let output = mean_state(&outputs)?;
    let (b_round, b_excl) = ensemble_bounds(opts.n, opts.r, opts.beta);
    Ok(EndToEndReport {
        branch: sel.branch,
        majority_frequency: sel.frequency(),
        sampled_j,
        t,
        min_gap,
        distance: trace_norm(&(output.matrix() - rho.matrix())),
        sampled_distance: trace_norm(&(outputs[sampled_j].matrix() - rho.matrix())),
        bound: b_round + b_excl,
        eps_mix,
        input: sel.post_state,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_diag, tfim};
    use crate::numerics::CVector;
    use crate::promises::fine_grained;
    use crate::random::{random_hermitian, seeded};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn eigenstate(spectrum: &Spectrum, k: usize) -> DensityMatrix {
        let col = spectrum.columns(k).start;
        DensityMatrix::pure(&CVector::from_iterator(spectrum.dim(), spectrum.basis().column(col).iter().copied()))
            .unwrap()
    }

    #[test]
    fn promised_gibbs_examples() {
        let model = random_diag(6, 2, 0.0).unwrap();
        let s = model.spectrum();
        let full = RoundingPromise::full();
        let mixed = DensityMatrix::maximally_mixed(6);
        assert!(trace_norm(&(promised_gibbs(s, &full, 3.0).unwrap().matrix() - mixed.matrix())) < 1e-12);
        let exact = exact_promised_gibbs(s, &full, 3.0).unwrap();
        assert!(trace_norm(&(exact.matrix() - gibbs_state(s, 3.0).matrix())) < 1e-12);
        let m = &PromiseFamily::new(2, 1, Branch::L).unwrap().coarse[0];
        let rho = promised_gibbs(s, m, 2.0).unwrap();
        let p = s.apply(|l| if m.contains(l) { 1.0 } else { 0.0 });
        assert!(trace(&(rho.matrix() * (identity(6) - &p))).re.abs() < 1e-12);
        let uniform = promised_gibbs(s, m, 0.0).unwrap();
        let rank = trace(&p).re;
        assert!(trace_norm(&(uniform.matrix() - &p / crate::numerics::C64::new(rank, 0.0))) < 1e-12);
        assert_abs_diff_eq!(approx_support(&rho, m, s), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(approx_support(&mixed, m, s), rank / 6.0, epsilon = 1e-12);
        let empty = RoundingPromise::new(vec![crate::promises::Interval::new(0.3, 0.30001)]).unwrap();
        let model2 = tfim(1, 2, 1.0).unwrap();
        assert!(matches!(promised_gibbs(model2.spectrum(), &empty, 1.0), Err(Error::EmptyPromisedSubspace)));
    }

    #[test]
    fn rounding_fidelity_and_distance() {
        for seed in 0..5 {
            let model = random_diag(16, seed, 0.0).unwrap();
            let fam = PromiseFamily::new(3, 2, Branch::R).unwrap();
            for beta in [1.0, 10.0] {
                let rep = ensemble_report(model.spectrum(), &fam, beta).unwrap();
                assert_eq!(rep.violations, 0, "seed {seed} β {beta}");
                assert!(rep.min_fidelity >= rep.fidelity_bound);
            }
        }
    }

    #[test]
    fn ensemble_bound_arithmetic() {
        let (a, b) = ensemble_bounds(4, 2, 1.0);
        assert_abs_diff_eq!(a + b, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn infinite_temperature_ensemble() {
        let model = random_diag(16, 9, 0.0).unwrap();
        let fam = PromiseFamily::new(3, 2, Branch::L).unwrap();
        let rep = ensemble_report(model.spectrum(), &fam, 0.0).unwrap();
        assert!(rep.dist_exact_avg <= 2.0 * 0.25);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn povm_examples() {
        let model = tfim(1, 2, 1.0).unwrap();
        let s = model.spectrum();
        let (n, r) = (2, 1);
        let profile = lr_profile(n, r, 1e-3, Mode::Exact).unwrap();
        for k in 0..s.len() {
            let sigma = eigenstate(s, k);
            let res = left_right_povm(&sigma, s, n, r, 1e-3, Mode::Exact).unwrap();
            let x = profile.eval(s.eigenvalues()[k]);
            assert_abs_diff_eq!(res.success_probability, x.powi(4) + (1.0 - x * x).powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(res.left.probability + res.right.probability, 1.0, epsilon = 1e-10);
            if (x - 1.0).abs() < 1e-15 {
                assert_abs_diff_eq!(res.left.probability, 1.0, epsilon = 1e-12);
                let post = res.left.post_state.as_ref().unwrap();
                assert!(trace_norm(&(post.matrix() - sigma.matrix())) < 1e-10);
            }
        }
        // An eigenvalue sitting where p_LR = 1/√2 minimizes the success probability.
        let target = 1.0 / 2f64.sqrt();
        let grid = profile.sample(200_001);
        let (lam, _) =
            grid.iter().copied().min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs())).unwrap();
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![
            crate::numerics::c(lam),
            crate::numerics::c(0.0),
            crate::numerics::c(1.0),
        ]));
        let spec = eigh(&h, CLUSTER_TOL).unwrap();
        let idx = spec.eigenvalues().iter().position(|&l| (l - lam).abs() < 1e-15).unwrap();
        let res = left_right_povm(&eigenstate(&spec, idx), &spec, n, r, 1e-3, Mode::Exact).unwrap();
        assert_abs_diff_eq!(res.success_probability, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn povm_support_guarantee() {
        let model = random_diag(8, 4, 0.0).unwrap();
        let s = model.spectrum();
        let mut rng = seeded(11);
        for mode in [Mode::Exact, Mode::Poly] {
            let delta = 1e-3;
            let povm = LeftRightPovm::new(s, 2, 1, delta, mode).unwrap();
            for _ in 0..20 {
                let sigma = random_density_matrix(8, &mut rng);
                let res = povm.measure(&sigma).unwrap();
                assert!(res.success_probability >= 0.5 - 1e-10);
                for b in [Branch::L, Branch::R] {
                    let o = res.outcome(b);
                    if o.unnormalized >= 1.0 / 3.0 {
                        let fine = fine_grained(2, 1, b).unwrap();
                        let sup = approx_support(o.post_state.as_ref().unwrap(), &fine, s);
                        let tol = if mode == Mode::Exact { 1e-12 } else { delta };
                        assert!(sup >= 1.0 - tol, "{mode:?} {b} {sup}");
                    }
                }
            }
        }
    }

    #[test]
    fn majority_trial_count() {
        assert_eq!(majority_trials(0.1).unwrap(), 47);
        assert_eq!(majority_trials(0.01).unwrap() % 2, 1);
        assert!(majority_trials(0.5).is_err());
    }

    fn two_branch_source(p_left: f64) -> (Spectrum, LeftRightPovm, DensityMatrix) {
        // Eigenvalue 0.5 sits in an R window for (n, r) = (1, 1), so p_LR = 1 there; 0 maps to p_LR = 0.
        let w = crate::promises::deletion_width(1, 1);
        let (a, b) = (2.5 * w, 0.5 * w);
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![crate::numerics::c(a), crate::numerics::c(b)]));
        let spec = eigh(&h, CLUSTER_TOL).unwrap();
        let povm = LeftRightPovm::new(&spec, 1, 1, 1e-3, Mode::Exact).unwrap();
        let sigma = DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            crate::numerics::c(p_left),
            crate::numerics::c(1.0 - p_left),
        ])))
        .unwrap();
        (spec, povm, sigma)
    }

    #[test]
    fn majority_degenerate_source() {
        let (_, povm, sigma) = two_branch_source(1.0);
        let mut rng = seeded(1);
        let mut prep = |_: &mut _| sigma.clone();
        let out = majority_select(&mut prep, &povm, 0.1, &mut rng).unwrap();
        assert_eq!(out.branch, Branch::L);
        assert_eq!(out.count, out.trials);
    }

    #[test]
    fn majority_failure_rate() {
        let (_, povm, sigma) = two_branch_source(0.8);
        let res = povm.measure(&sigma).unwrap();
        assert_abs_diff_eq!(res.left.probability, 0.8, epsilon = 1e-12);
        let delta_fail = 0.1;
        let mut failures = 0;
        for seed in 0..1000 {
            let mut rng = seeded(seed);
            let mut prep = |_: &mut _| sigma.clone();
            let out = majority_select(&mut prep, &povm, delta_fail, &mut rng).unwrap();
            assert!(out.frequency() > 0.5);
            if res.outcome(out.branch).probability < 1.0 / 3.0 {
                failures += 1;
            }
        }
        assert!(failures as f64 / 1000.0 <= delta_fail);
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = seeded(3);
        let h = random_hermitian(5, &mut rng);
        let (f, b) = fidelity_bound_check(&h, &h, 2.0).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-15);
        let shifted = &h + identity(5) * crate::numerics::c(0.01);
        let (f, b) = fidelity_bound_check(&h, &shifted, 2.0).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(b, (-0.02f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn end_to_end_small() {
        let model = tfim(1, 2, 1.0).unwrap();
        let opts = EndToEndOptions {
            n: 2,
            r: 1,
            beta: 1.0,
            gamma: 0.05,
            time: TimePolicy::GapMultiple(50.0),
            povm_mode: Mode::Exact,
            delta_sup: 1e-3,
            delta_fail: 0.1,
            seed: 3,
        };
        let a = end_to_end(&model, Filter::metropolis(1.0), &opts).unwrap();
        assert!(a.distance <= a.bound + 1e-4, "{} vs {}", a.distance, a.bound);
        let b = end_to_end(&model, Filter::metropolis(1.0), &opts).unwrap();
        assert_eq!(a.distance, b.distance);
        assert_eq!(a.sampled_j, b.sampled_j);
        let zero = EndToEndOptions { time: TimePolicy::Fixed(0.0), ..opts };
        let z = end_to_end(&model, Filter::metropolis(1.0), &zero).unwrap();
        let rho = gibbs_state(model.spectrum(), 1.0);
        assert_abs_diff_eq!(z.distance, trace_norm(&(z.input.matrix() - rho.matrix())), epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn povm_success_at_least_half(seed in 0u64..10_000) {
            let model = tfim(1, 2, 1.0).unwrap();
            let mut rng = seeded(seed);
            let sigma = random_density_matrix(4, &mut rng);
            let res = left_right_povm(&sigma, model.spectrum(), 3, 2, 1e-3, Mode::Exact).unwrap();
            prop_assert!(res.success_probability >= 0.5 - 1e-10);
        }

        #[test]
        fn partition_function_ordering(seed in 0u64..1000, beta in 0.0f64..10.0) {
            let model = random_diag(8, seed, 0.0).unwrap();
            for m in &PromiseFamily::new(2, 2, Branch::L).unwrap().coarse {
                let (z_hat, z) = partition_functions(model.spectrum(), m, beta);
                prop_assert!(z_hat <= z * (1.0 + 1e-12));
            }
        }
    }
}

//! Experiment drivers. Each returns CSV tables plus named checks.

use promised_davies_core::approxdavies::adversarial_cell;
use promised_davies_core::davies::{
    attenuated_couplings, coupling_perturbation_check, fixed_point_residual, gap_cell, ideal_davies,
    jump_perturbation_check, leakage, promised_davies, promised_projector, random_supported_state, resource_estimate,
    spectral_gap_of, Filter, FilterKind, PromisedOptions, BOHR_TOL,
};
use promised_davies_core::models::{random_diag, tfim, HamiltonianModel};
use promised_davies_core::numerics::{evolve, gibbs_state, kernel_dimension, superop_spectrum, CMatrix};
use promised_davies_core::promises::{fine_grained, Branch, Interval, PromiseFamily};
use promised_davies_core::protocol::{
    approx_support, end_to_end, ensemble_report, fidelity_bound_check, promised_gibbs, EndToEndOptions, LeftRightPovm,
    TimePolicy,
};
use promised_davies_core::random::{random_density_matrix, random_hermitian, stream_rng};
use promised_davies_core::specfun::{projection_poly, step_error, step_poly, Mode, ProfileSpec};
use promised_davies_core::Error as CoreError;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, ModelConfig, TimeConfig};
use crate::{Check, Outcome, Table};

type CoreResult<T> = Result<T, CoreError>;

/// Residual and kernel thresholds shared by the fixed-point checks.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Instantiated model with the labels used in CSV rows.
pub struct Instance {
    pub label: String,
    pub n1: usize,
    pub n2: usize,
    pub v: f64,
    pub seed: u64,
    pub model: HamiltonianModel,
}

pub fn build_models(cfg: &ExperimentConfig) -> CoreResult<Vec<Instance>> {
    let mut out = Vec::new();
    for m in &cfg.models {
        match *m {
            ModelConfig::Tfim { n1, n2, v } => out.push(Instance {
                label: format!("tfim{n1}x{n2}"),
                n1,
                n2,
                v,
                seed: cfg.seed,
                model: tfim(n1, n2, v)?,
            }),
            ModelConfig::Random { dim, count, min_gap } => {
                for k in 0..count as u64 {
                    let seed = cfg.seed + k;
                    out.push(Instance {
                        label: format!("random{dim}"),
                        n1: dim,
                        n2: 1,
                        v: 0.0,
                        seed,
                        model: random_diag(dim, seed, min_gap)?,
                    });
                }
            }
            ModelConfig::Adversarial { .. } => {}
        }
    }
    Ok(out)
}

fn filter_name(k: FilterKind) -> &'static str {
    match k {
        FilterKind::Metropolis => "metropolis",
        FilterKind::Glauber => "glauber",
    }
}

fn filters(cfg: &ExperimentConfig) -> Vec<FilterKind> {
    cfg.filters.iter().map(|&f| f.into()).collect()
}

fn branches(cfg: &ExperimentConfig) -> Vec<Branch> {
    cfg.branches.iter().map(|&b| b.into()).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    match cfg.experiment {
        Experiment::FixedPoint => fixed_point(cfg),
        Experiment::GapSweep => gap_sweep(cfg),
        Experiment::Ensemble => ensemble(cfg),
        Experiment::EndToEnd => end_to_end_runs(cfg),
        Experiment::Adversarial => adversarial(cfg),
        Experiment::PolyCheck => poly_check(cfg),
        Experiment::Resource => resource(cfg),
        Experiment::Povm => povm(cfg),
        Experiment::Fidelity => fidelity(cfg),
        Experiment::Perturbation => perturbation(cfg),
    }
}

fn fixed_point(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let mut items = Vec::new();
    for (mi, _) in models.iter().enumerate() {
        for &f in &filters(cfg) {
            for &beta in &cfg.betas {
                items.push((mi, f, beta));
            }
        }
    }
    let rows = items
        .par_iter()
        .map(|&(mi, kind, beta)| -> CoreResult<(Vec<String>, f64, usize)> {
            let inst = &models[mi];
            let l = ideal_davies(&inst.model, Filter::new(kind, beta)?, BOHR_TOL)?;
            let residual = fixed_point_residual(&l, &gibbs_state(inst.model.spectrum(), beta))?;
            let spec = superop_spectrum(l.superop())?;
            let kd = kernel_dimension(&spec);
            let gap = promised_davies_core::numerics::gap_from_spectrum(&spec);
            let row = vec![
                inst.label.clone(),
                inst.seed.to_string(),
                inst.model.dim().to_string(),
                real(beta),
                filter_name(kind).into(),
                real(residual),
                kd.to_string(),
                real(gap),
            ];
            Ok((row, residual, kd))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let bad_kernels = rows.iter().filter(|r| r.2 != 1).count();
    let mut out = Outcome::default();
    out.checks.push(Check::assert("ideal_residual", worst <= RESIDUAL_TOL, format!("max residual {worst:.3e}")));
    out.checks.push(Check::assert(
        "ideal_kernel",
        bad_kernels == 0,
        format!("{bad_kernels} generators with kernel dimension != 1"),
    ));
    out.tables.push(Table::new(
        "fixed_point",
        &["model", "seed", "dim", "beta", "filter", "residual", "kernel_dim", "gap"],
        rows.into_iter().map(|r| r.0).collect(),
    ));
    if !cfg.families.is_empty() {
        promised_fixed_points(cfg, &models, &mut out)?;
    }
    Ok(out)
}

/// Fixed point and support confinement of exact promised generators.
fn promised_fixed_points(cfg: &ExperimentConfig, models: &[Instance], out: &mut Outcome) -> CoreResult<()> {
    let gammas = if cfg.gammas.is_empty() { vec![0.0] } else { cfg.gammas.clone() };
    let mut items = Vec::new();
    for mi in 0..models.len() {
        for &beta in &cfg.betas {
            for &(n, r) in &cfg.families {
                for b in branches(cfg) {
                    for j in 0..1usize << r {
                        for &g in &gammas {
                            items.push((mi, beta, n, r, b, j, g));
                        }
                    }
                }
            }
        }
    }
    let kind = filters(cfg)[0];
    let rows = items
        .par_iter()
        .enumerate()
        .map(|(idx, &(mi, beta, n, r, b, j, g))| -> CoreResult<(Vec<String>, f64, f64)> {
            let inst = &models[mi];
            let fam = PromiseFamily::new(n, r, b)?;
            let m = &fam.coarse[j];
            let l = promised_davies(&inst.model, Filter::new(kind, beta)?, m, &PromisedOptions::exact(g))?;
            let residual = match promised_gibbs(inst.model.spectrum(), m, beta) {
                Ok(rho) => fixed_point_residual(&l, &rho)?,
                Err(CoreError::EmptyPromisedSubspace) => 0.0,
                Err(e) => return Err(e),
            };
            let p = promised_projector(inst.model.spectrum(), m);
            let mut rng = stream_rng(cfg.seed, idx as u64);
            let mut leak: f64 = 0.0;
            if let Some(sigma) = random_supported_state(&p, &mut rng) {
                for t in [0.1, 1.0, 10.0] {
                    leak = leak.max(leakage(&evolve(l.superop(), &sigma, t)?, &p).abs());
                }
            }
            let row = vec![
                inst.label.clone(),
                inst.seed.to_string(),
                real(beta),
                b.to_string(),
                n.to_string(),
                r.to_string(),
                j.to_string(),
                real(g),
                real(residual),
                real(leak),
            ];
            Ok((row, residual, leak))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let worst_res = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_leak = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    out.checks.push(Check::assert(
        "promised_residual",
        worst_res <= RESIDUAL_TOL,
        format!("max residual {worst_res:.3e}"),
    ));
    out.checks.push(Check::assert("confinement", worst_leak <= RESIDUAL_TOL, format!("max leakage {worst_leak:.3e}")));
    out.tables.push(Table::new(
        "promised_fixed_point",
        &["model", "seed", "beta", "branch", "n", "r", "j", "gamma", "residual", "leakage"],
        rows.into_iter().map(|r| r.0).collect(),
    ));
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GapRecord {
    pub instance: usize,
    pub beta: f64,
    pub filter: FilterKind,
    pub row: promised_davies_core::davies::GapRow,
}

fn gap_sweep(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let mut bases = Vec::new();
    for mi in 0..models.len() {
        for &beta in &cfg.betas {
            for kind in filters(cfg) {
                bases.push((mi, beta, kind));
            }
        }
    }
    let ideal = bases
        .par_iter()
        .map(|&(mi, beta, kind)| spectral_gap_of(&ideal_davies(&models[mi].model, Filter::new(kind, beta)?, BOHR_TOL)?))
        .collect::<CoreResult<Vec<f64>>>()?;
    let mut cells = Vec::new();
    for (bi, _) in bases.iter().enumerate() {
        for &(n, r) in &cfg.families {
            for b in branches(cfg) {
                for j in 0..1usize << r {
                    for &g in &cfg.gammas {
                        cells.push((bi, n, r, b, j, g));
                    }
                }
            }
        }
    }
    let records = cells
        .par_iter()
        .map(|&(bi, n, r, b, j, g)| -> CoreResult<GapRecord> {
            let (mi, beta, kind) = bases[bi];
            let fam = PromiseFamily::new(n, r, b)?;
            let row = gap_cell(&models[mi].model, Filter::new(kind, beta)?, &fam, j, g, ideal[bi])?;
            Ok(GapRecord { instance: mi, beta, filter: kind, row })
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.checks.extend(gap_checks(&records, &ideal));
    let rows = records
        .iter()
        .map(|rec| {
            let inst = &models[rec.instance];
            let r = &rec.row;
            vec![
                inst.label.clone(),
                inst.n1.to_string(),
                inst.n2.to_string(),
                real(inst.v),
                real(rec.beta),
                filter_name(rec.filter).into(),
                r.branch.to_string(),
                r.n.to_string(),
                r.r.to_string(),
                r.j.to_string(),
                real(r.gamma),
                real(r.gap),
                real(r.gap_ideal),
                r.kernel_dim.to_string(),
                real(r.residual),
            ]
        })
        .collect();
    out.tables.push(Table::new(
        "gap_sweep",
        &[
            "model",
            "n1",
            "n2",
            "v",
            "beta",
            "filter",
            "branch",
            "n",
            "r",
            "j",
            "gamma",
            "gap",
            "gap_ideal",
            "kernel_dim",
            "residual",
        ],
        rows,
    ));
    Ok(out)
}

/// Continuity at small `γ`, slowdown at large `γ`, and positivity.
pub fn gap_checks(records: &[GapRecord], ideal: &[f64]) -> Vec<Check> {
    let mut checks = Vec::new();
    let all_positive = records.iter().all(|r| r.row.gap > 0.0) && ideal.iter().all(|&g| g > 0.0);
    checks.push(Check::assert("gap_positive", all_positive, "every promised and ideal gap is positive".into()));
    let non_mixing = records.iter().filter(|r| !r.row.mixing()).count();
    checks.push(Check::note("mixing", format!("{non_mixing} cells with kernel dimension != 1")));
    let bad_residual = records.iter().filter(|r| r.row.mixing() && !(r.row.residual <= RESIDUAL_TOL)).count();
    checks.push(Check::assert(
        "gap_residual",
        bad_residual == 0,
        format!("{bad_residual} mixing cells with residual above tolerance"),
    ));
    // Group rows by everything except γ.
    let mut groups: Vec<Vec<&GapRecord>> = Vec::new();
    for rec in records {
        let key = |r: &GapRecord| (r.instance, r.beta.to_bits(), r.filter, r.row.branch, r.row.n, r.row.r, r.row.j);
        match groups.iter_mut().find(|g| key(g[0]) == key(rec)) {
            Some(g) => g.push(rec),
            None => groups.push(vec![rec]),
        }
    }
    let with_zero: Vec<_> = groups.iter().filter(|g| g.iter().any(|r| r.row.gamma == 0.0)).collect();
    if !with_zero.is_empty() {
        let mut worst: f64 = 0.0;
        for g in &with_zero {
            let zero = g.iter().find(|r| r.row.gamma == 0.0).unwrap().row.gap;
            if let Some(min) = g.iter().filter(|r| r.row.gamma > 0.0).min_by(|a, b| a.row.gamma.total_cmp(&b.row.gamma))
            {
                worst = worst.max((min.row.gap - zero).abs() / zero);
            }
        }
        checks.push(Check::assert(
            "gap_continuity",
            worst <= 0.1,
            format!("largest relative change at smallest γ {worst:.3e}"),
        ));
    }
    let slow = groups.iter().any(|g| {
        let pos: Vec<_> = g.iter().filter(|r| r.row.gamma > 0.0).collect();
        let lo = pos.iter().min_by(|a, b| a.row.gamma.total_cmp(&b.row.gamma));
        let hi = pos.iter().max_by(|a, b| a.row.gamma.total_cmp(&b.row.gamma));
        matches!((lo, hi), (Some(lo), Some(hi)) if hi.row.gap < lo.row.gap)
    });
    if groups.iter().any(|g| g.iter().filter(|r| r.row.gamma > 0.0).count() >= 2) {
        checks.push(Check::assert("gap_slowdown", slow, "some promise mixes slower at the largest γ".into()));
    }
    checks
}

/// `(n, r)` per model: configured families, else drawn from the ranges.
fn ensemble_families(cfg: &ExperimentConfig, index: u64) -> Vec<(u32, u32)> {
    if !cfg.families.is_empty() {
        return cfg.families.clone();
    }
    let (n_range, r_range) = (cfg.n_range.unwrap(), cfg.r_range.unwrap());
    let mut rng = stream_rng(cfg.seed, 0x656e73 + index);
    vec![(rng.random_range(n_range.0..=n_range.1), rng.random_range(r_range.0..=r_range.1))]
}

fn ensemble(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let mut items = Vec::new();
    for (mi, inst) in models.iter().enumerate() {
        for (n, r) in ensemble_families(cfg, inst.seed) {
            for &beta in &cfg.betas {
                for b in branches(cfg) {
                    items.push((mi, n, r, beta, b));
                }
            }
        }
    }
    let reports = items
        .par_iter()
        .map(|&(mi, n, r, beta, b)| {
            let fam = PromiseFamily::new(n, r, b)?;
            ensemble_report(models[mi].model.spectrum(), &fam, beta).map(|rep| (mi, rep))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let violations: usize = reports.iter().map(|(_, r)| r.violations).sum();
    let sub = |f: &dyn Fn(&promised_davies_core::protocol::EnsembleReport) -> bool| {
        reports.iter().filter(|(_, r)| !f(r)).count()
    };
    let v_thm = sub(&|r| r.dist_avg <= r.bound_thm + 1e-12);
    let v_round = sub(&|r| r.dist_rounding <= r.bound_rounding + 1e-12);
    let v_excl = sub(&|r| r.dist_exact_avg <= r.bound_exclusion + 1e-12);
    let mut out = Outcome::default();
    out.checks.push(Check::assert("ensemble_bound", v_thm == 0, format!("{v_thm} violations of the combined bound")));
    out.checks.push(Check::assert(
        "rounding_bound",
        v_round == 0,
        format!("{v_round} violations of the rounding bound"),
    ));
    out.checks.push(Check::assert(
        "exclusion_bound",
        v_excl == 0,
        format!("{v_excl} violations of the exclusion bound"),
    ));
    out.checks.push(Check::assert("ensemble_invariants", violations == 0, format!("{violations} violations in total")));
    let rows = reports
        .iter()
        .map(|(mi, r)| {
            let inst = &models[*mi];
            vec![
                inst.seed.to_string(),
                inst.model.dim().to_string(),
                real(r.beta),
                r.n.to_string(),
                r.r.to_string(),
                r.branch.to_string(),
                real(r.dist_avg),
                real(r.dist_exact_avg),
                real(r.dist_rounding),
                real(r.bound_thm),
                real(r.bound_rounding),
                real(r.bound_exclusion),
                r.violations.to_string(),
            ]
        })
        .collect();
    out.tables.push(Table::new(
        "ensemble",
        &[
            "seed",
            "dim",
            "beta",
            "n",
            "r",
            "branch",
            "dist_avg",
            "dist_exact_avg",
            "dist_rounding",
            "bound_thm",
            "bound_47",
            "bound_48",
            "violations",
        ],
        rows,
    ));
    Ok(out)
}

fn end_to_end_runs(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let time = match cfg.time.unwrap_or(TimeConfig::GapMultiple(50.0)) {
        TimeConfig::Fixed(t) => TimePolicy::Fixed(t),
        TimeConfig::GapMultiple(c) => TimePolicy::GapMultiple(c),
    };
    let mut items = Vec::new();
    for mi in 0..models.len() {
        for &beta in &cfg.betas {
            for &(n, r) in &cfg.families {
                for &g in &cfg.gammas {
                    items.push((mi, beta, n, r, g));
                }
            }
        }
    }
    let kind = filters(cfg)[0];
    let slack = cfg.slack.unwrap_or(1e-3);
    let reports = items
        .par_iter()
        .map(|&(mi, beta, n, r, gamma)| {
            let opts = EndToEndOptions {
                n,
                r,
                beta,
                gamma,
                time,
                povm_mode: cfg.mode.into(),
                delta_sup: cfg.delta_sup,
                delta_fail: cfg.delta_fail,
                seed: models[mi].seed,
            };
            end_to_end(&models[mi].model, Filter::new(kind, beta)?, &opts).map(|rep| (mi, opts, rep))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let failures = reports.iter().filter(|(_, _, rep)| !(rep.distance <= rep.bound + slack)).count();
    let mut out = Outcome::default();
    out.checks.push(Check::assert(
        "end_to_end_bound",
        failures == 0,
        format!("{failures} runs outside bound + {slack:e}"),
    ));
    let rows = reports
        .iter()
        .map(|(mi, o, rep)| {
            vec![
                models[*mi].seed.to_string(),
                real(o.beta),
                o.n.to_string(),
                o.r.to_string(),
                rep.branch.to_string(),
                real(o.gamma),
                real(rep.t),
                real(rep.distance),
                real(rep.bound),
                real(rep.eps_mix),
            ]
        })
        .collect();
    out.tables.push(Table::new(
        "end_to_end",
        &["seed", "beta", "n", "r", "branch", "gamma", "t", "distance", "bound", "eps_mix"],
        rows,
    ));
    Ok(out)
}

fn adversarial(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let kind = filters(cfg)[0];
    let mut items = Vec::new();
    for m in &cfg.models {
        if let ModelConfig::Adversarial { qubits, precision_bits } = *m {
            for &beta in &cfg.betas {
                for &a in &cfg.alphas {
                    for &mm in &cfg.m_meds {
                        items.push((qubits, precision_bits, a, mm, beta));
                    }
                }
            }
        }
    }
    let rows = items
        .par_iter()
        .map(|&(q, n, a, mm, beta)| adversarial_cell(q, n, a, mm, beta, cfg.seed, kind))
        .collect::<CoreResult<Vec<_>>>()?;
    let mut out = Outcome::default();
    let dist = |a: f64, m: usize, beta: f64| {
        rows.iter().find(|r| r.alpha == a && r.m_med == m && r.beta == beta).map(|r| r.distance)
    };
    let mut exact_ok = true;
    let mut ambiguous_ok = true;
    let mut amplified_ok = true;
    let (mut saw_exact, mut saw_amb, mut saw_amp) = (false, false, false);
    let m_lo = cfg.m_meds.iter().copied().min().unwrap_or(1);
    let m_hi = cfg.m_meds.iter().copied().max().unwrap_or(1);
    for &beta in &cfg.betas {
        for &m in &cfg.m_meds {
            if let Some(d0) = dist(0.0, m, beta) {
                saw_exact = true;
                exact_ok &= d0 <= 1e-6;
                if let Some(d1) = dist(1.0, m, beta) {
                    saw_amb = true;
                    ambiguous_ok &= d1 >= d0 + 0.01;
                }
            }
        }
        if let (Some(lo), Some(hi)) = (dist(0.5, m_lo, beta), dist(0.5, m_hi, beta)) {
            if m_hi > m_lo {
                saw_amp = true;
                amplified_ok &= hi <= lo;
            }
        }
    }
    if saw_exact {
        out.checks.push(Check::assert("exact_estimation", exact_ok, "distance at α = 0 within 1e-6".into()));
    }
    if saw_amb {
        out.checks.push(Check::assert(
            "ambiguity_error",
            ambiguous_ok,
            "distance at α = 1 exceeds α = 0 by 0.01".into(),
        ));
    }
    if saw_amp {
        out.checks.push(Check::assert(
            "median_amplification",
            amplified_ok,
            format!("m_med {m_hi} no worse than {m_lo} at α = 0.5"),
        ));
    }
    let bad = rows.iter().filter(|r| r.kernel_dim == 1 && !(r.residual <= RESIDUAL_TOL)).count();
    out.checks.push(Check::assert(
        "adversarial_residual",
        bad == 0,
        format!("{bad} stationary states above residual tolerance"),
    ));
    let degenerate = rows.iter().filter(|r| r.kernel_dim != 1).count();
    out.checks.push(Check::note("degenerate_kernel", format!("{degenerate} cells with degenerate kernel")));
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.q.to_string(),
                r.n.to_string(),
                real(r.alpha),
                r.m_med.to_string(),
                real(r.beta),
                r.seed.to_string(),
                real(r.distance),
                real(r.residual),
                r.kernel_dim.to_string(),
            ]
        })
        .collect();
    out.tables.push(Table::new(
        "adversarial",
        &["q", "n", "alpha", "m_med", "beta", "seed", "distance", "residual", "kernel_dim"],
        table,
    ));
    Ok(out)
}

/// `(kind, κ, δ, degree, max error)`.
pub type PolyRow = (&'static str, f64, f64, usize, f64);

/// Step and projection polynomial accuracy plus the `degree·κ/ln(1/δ)` ratio.
pub fn poly_rows(kappas: &[f64], deltas: &[f64]) -> CoreResult<Vec<PolyRow>> {
    let mut items = Vec::new();
    for &k in kappas {
        for &d in deltas {
            items.push((k, d));
        }
    }
    let rows = items
        .par_iter()
        .map(|&(kappa, delta)| -> CoreResult<Vec<PolyRow>> {
            let step = step_poly(kappa, delta)?;
            let step_err = step_error(&step, kappa);
            let spec = ProfileSpec::new(
                vec![
                    (Interval::new(0.0, 0.3), false),
                    (Interval::new(0.3 + kappa, 0.7), true),
                    (Interval::new(0.7 + kappa, 1.0), false),
                ],
                delta,
            )?;
            let proj = projection_poly(&spec)?;
            let proj_err = spec.max_error(&proj);
            Ok(vec![
                ("step", kappa, delta, step.degree(), step_err),
                ("projection", kappa, delta, proj.degree(), proj_err),
            ])
        })
        .collect::<CoreResult<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Largest ratio between extreme values of `degree·κ/ln(1/δ)` per kind.
pub fn degree_law_spread(rows: &[PolyRow]) -> f64 {
    ["step", "projection"]
        .iter()
        .map(|kind| {
            let laws: Vec<f64> =
                rows.iter().filter(|r| r.0 == *kind).map(|r| r.3 as f64 * r.1 / (1.0 / r.2).ln()).collect();
            let hi = laws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = laws.iter().copied().fold(f64::INFINITY, f64::min);
            if laws.is_empty() {
                1.0
            } else {
                hi / lo
            }
        })
        .fold(1.0, f64::max)
}

fn poly_check(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let rows = poly_rows(&cfg.kappas, &cfg.deltas)?;
    let misses = rows.iter().filter(|r| !(r.4 <= r.2)).count();
    let spread = degree_law_spread(&rows);
    let mut out = Outcome::default();
    out.checks.push(Check::assert("poly_error", misses == 0, format!("{misses} polynomials miss their target")));
    out.checks.push(Check::assert("degree_law", spread <= 3.0, format!("degree law spread {spread:.3}")));
    out.tables.push(Table::new(
        "poly_check",
        &["kind", "kappa", "delta", "degree", "max_error", "degree_law"],
        rows.iter()
            .map(|r| {
                vec![
                    r.0.into(),
                    real(r.1),
                    real(r.2),
                    r.3.to_string(),
                    real(r.4),
                    real(r.3 as f64 * r.1 / (1.0 / r.2).ln()),
                ]
            })
            .collect(),
    ));
    Ok(out)
}

fn resource(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let t = match cfg.time {
        Some(TimeConfig::Fixed(t)) => t,
        _ => return Err(CoreError::InvalidParameter("resource estimate needs a fixed time")),
    };
    let eps = cfg.eps.unwrap_or(0.1);
    let mut rows = Vec::new();
    for &(n, r) in &cfg.families {
        for &g in &cfg.gammas {
            for &beta in &cfg.betas {
                let e = resource_estimate(n, r, g, t, cfg.delta_leak, beta, eps)?;
                rows.push(vec![
                    n.to_string(),
                    r.to_string(),
                    real(g),
                    real(t),
                    real(cfg.delta_leak),
                    real(beta),
                    real(eps),
                    real(e.h_queries_prefactor),
                    real(e.thm_queries_prefactor),
                    real(e.polylog),
                    real(e.h_queries),
                    real(e.thm_queries),
                    real(e.n_choice),
                    real(e.r_choice),
                    "constant-1".into(),
                ]);
            }
        }
    }
    let mut out = Outcome::default();
    out.checks.push(Check::note("resource", "asymptotic counts with every implied constant set to 1".into()));
    out.tables.push(Table::new(
        "resource",
        &[
            "n",
            "r",
            "gamma",
            "t",
            "delta_l",
            "beta",
            "eps",
            "h_queries_prefactor",
            "thm_queries_prefactor",
            "polylog",
            "h_queries",
            "thm_queries",
            "n_choice",
            "r_choice",
            "convention",
        ],
        rows,
    ));
    Ok(out)
}

fn povm(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let samples = cfg.samples.unwrap_or(200);
    let mode: Mode = cfg.mode.into();
    let tol = match mode {
        Mode::Exact => 1e-12,
        Mode::Poly => cfg.delta_sup,
    };
    let mut items = Vec::new();
    for mi in 0..models.len() {
        for &(n, r) in &cfg.families {
            items.push((mi, n, r));
        }
    }
    let blocks = items
        .par_iter()
        .enumerate()
        .map(|(idx, &(mi, n, r))| -> CoreResult<Vec<(Vec<String>, f64, bool)>> {
            let inst = &models[mi];
            let s = inst.model.spectrum();
            let povm = LeftRightPovm::new(s, n, r, cfg.delta_sup, mode)?;
            let fine = [fine_grained(n, r, Branch::L)?, fine_grained(n, r, Branch::R)?];
            let mut rng = stream_rng(cfg.seed, idx as u64);
            let mut rows = Vec::with_capacity(samples);
            for k in 0..samples {
                let sigma = random_density_matrix(inst.model.dim(), &mut rng);
                let res = povm.measure(&sigma)?;
                let mut ok = true;
                let mut supports = [f64::NAN; 2];
                for (bi, b) in [Branch::L, Branch::R].into_iter().enumerate() {
                    let o = res.outcome(b);
                    if let Some(post) = &o.post_state {
                        supports[bi] = approx_support(post, &fine[bi], s);
                        if o.unnormalized >= 1.0 / 3.0 {
                            ok &= supports[bi] >= 1.0 - tol;
                        }
                    }
                }
                rows.push((
                    vec![
                        inst.label.clone(),
                        inst.seed.to_string(),
                        n.to_string(),
                        r.to_string(),
                        k.to_string(),
                        real(res.success_probability),
                        real(res.left.unnormalized),
                        real(res.right.unnormalized),
                        real(supports[0]),
                        real(supports[1]),
                    ],
                    res.success_probability,
                    ok,
                ));
            }
            Ok(rows)
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let rows: Vec<_> = blocks.into_iter().flatten().collect();
    let min_success = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let support_fail = rows.iter().filter(|r| !r.2).count();
    let mut out = Outcome::default();
    out.checks.push(Check::assert(
        "povm_success",
        min_success >= 0.5 - 1e-10,
        format!("smallest success probability {min_success:.12}"),
    ));
    out.checks.push(Check::assert(
        "povm_support",
        support_fail == 0,
        format!("{support_fail} outcomes violate the support guarantee"),
    ));
    out.tables.push(Table::new(
        "povm",
        &["model", "seed", "n", "r", "state", "success", "p_l", "p_r", "support_l", "support_r"],
        rows.into_iter().map(|r| r.0).collect(),
    ));
    Ok(out)
}

fn fidelity(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let samples = cfg.samples.unwrap_or(50);
    let dim = if cfg.max_dim() > 0 { cfg.max_dim() } else { 8 };
    let mut items = Vec::new();
    for k in 0..samples {
        for &beta in &cfg.betas {
            items.push((k, beta));
        }
    }
    let rows = items
        .par_iter()
        .map(|&(k, beta)| -> CoreResult<(Vec<String>, bool)> {
            let mut rng = stream_rng(cfg.seed, k as u64);
            let h = random_hermitian(dim, &mut rng);
            let scale = 10f64.powf(-3.0 * rng.random::<f64>());
            let dh: CMatrix = random_hermitian(dim, &mut rng) * promised_davies_core::C64::new(scale, 0.0);
            let (f, bound) = fidelity_bound_check(&h, &(&h + &dh), beta)?;
            let ok = f >= bound - 1e-12;
            Ok((vec![k.to_string(), dim.to_string(), real(beta), real(scale), real(f), real(bound)], ok))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| !r.1).count();
    let mut out = Outcome::default();
    out.checks.push(Check::assert("fidelity_bound", violations == 0, format!("{violations} violations")));
    out.tables.push(Table::new(
        "fidelity",
        &["pair", "dim", "beta", "scale", "fidelity", "bound"],
        rows.into_iter().map(|r| r.0).collect(),
    ));
    Ok(out)
}

fn perturbation(cfg: &ExperimentConfig) -> CoreResult<Outcome> {
    let models = build_models(cfg)?;
    let samples = cfg.samples.unwrap_or(100);
    let kind = filters(cfg)[0];
    let mut items = Vec::new();
    for mi in 0..models.len() {
        for &beta in &cfg.betas {
            for &(n, r) in &cfg.families {
                for b in branches(cfg) {
                    for j in 0..1usize << r {
                        for &g in &cfg.gammas {
                            for &d in &cfg.deltas {
                                items.push((mi, beta, n, r, b, j, g, d));
                            }
                        }
                    }
                }
            }
        }
    }
    let rows = items
        .par_iter()
        .enumerate()
        .map(|(idx, &(mi, beta, n, r, b, j, g, d))| -> CoreResult<(Vec<String>, bool, usize)> {
            let inst = &models[mi];
            let fam = PromiseFamily::new(n, r, b)?;
            let m = &fam.coarse[j];
            let ideal_opts = PromisedOptions::idealized(g, d);
            let poly_opts = PromisedOptions::poly(g, d, d);
            let s_exact = attenuated_couplings(&inst.model, m, &ideal_opts)?;
            let s_poly = attenuated_couplings(&inst.model, m, &poly_opts)?;
            let coupling_diff = coupling_perturbation_check(&s_exact, &s_poly);
            let filter = Filter::new(kind, beta)?;
            let l = promised_davies(&inst.model, filter, m, &ideal_opts)?;
            let lt = promised_davies(&inst.model, filter, m, &poly_opts)?;
            let rep = jump_perturbation_check(&l, &lt, samples, cfg.seed + idx as u64)?;
            let s = m.len() as f64;
            let chained = s * s * (2.0 * d + 2.0 * d);
            let row = vec![
                inst.label.clone(),
                real(beta),
                b.to_string(),
                n.to_string(),
                r.to_string(),
                j.to_string(),
                real(g),
                real(d),
                real(coupling_diff),
                real(2.0 * d),
                real(rep.delta_l),
                real(chained),
                rep.m.to_string(),
                real(rep.bound),
                real(rep.max_sampled),
                rep.violations.to_string(),
            ];
            Ok((row, coupling_diff <= 2.0 * d, rep.violations))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let coupling_fail = rows.iter().filter(|r| !r.1).count();
    let sampled: usize = rows.iter().map(|r| r.2).sum();
    let mut out = Outcome::default();
    out.checks.push(Check::assert(
        "coupling_perturbation",
        coupling_fail == 0,
        format!("{coupling_fail} cells above 2δ_leak"),
    ));
    out.checks.push(Check::assert(
        "jump_perturbation",
        sampled == 0,
        format!("{sampled} sampled states above the generator bound"),
    ));
    out.tables.push(Table::new(
        "perturbation",
        &[
            "model",
            "beta",
            "branch",
            "n",
            "r",
            "j",
            "gamma",
            "delta",
            "coupling_diff",
            "coupling_bound",
            "delta_l",
            "chained_bound",
            "jumps",
            "generator_bound",
            "max_sampled",
            "violations",
        ],
        rows.into_iter().map(|r| r.0).collect(),
    ));
    Ok(out)
}

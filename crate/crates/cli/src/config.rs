//! JSON experiment configuration.

use std::fmt;
use std::path::Path;

use promised_davies_core::davies::FilterKind;
use promised_davies_core::promises::{Branch, MAX_BITS};
use promised_davies_core::specfun::Mode;
use serde::{Deserialize, Serialize};

/// Largest Hilbert-space dimension accepted (superoperators are `d² × d²`).
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    FixedPoint,
    GapSweep,
    Ensemble,
    EndToEnd,
    Adversarial,
    PolyCheck,
    Resource,
    Povm,
    Fidelity,
    Perturbation,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Tfim {
        n1: usize,
        n2: usize,
        #[serde(default = "one")]
        v: f64,
    },
    /// Random spectrum in a Haar basis; `count` models with seeds `seed, seed+1, …`.
    Random {
        dim: usize,
        #[serde(default = "one_usize")]
        count: usize,
        #[serde(default)]
        min_gap: f64,
    },
    Adversarial {
        qubits: u32,
        precision_bits: u32,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeConfig {
    Fixed(f64),
    /// Multiple of the inverse smallest gap.
    GapMultiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterName {
    Metropolis,
    Glauber,
}

impl From<FilterName> for FilterKind {
    fn from(f: FilterName) -> Self {
        match f {
            FilterName::Metropolis => FilterKind::Metropolis,
            FilterName::Glauber => FilterKind::Glauber,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Poly,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Exact => Mode::Exact,
            ModeName::Poly => Mode::Poly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchName {
    L,
    R,
}

impl From<BranchName> for Branch {
    fn from(b: BranchName) -> Self {
        match b {
            BranchName::L => Branch::L,
            BranchName::R => Branch::R,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_filters")]
    pub filters: Vec<FilterName>,
    /// Promise families as `(n, r)` pairs.
    #[serde(default)]
    pub families: Vec<(u32, u32)>,
    /// Inclusive ranges drawn per seed by the ensemble experiment.
    #[serde(default)]
    pub n_range: Option<(u32, u32)>,
    #[serde(default)]
    pub r_range: Option<(u32, u32)>,
    #[serde(default = "default_branches")]
    pub branches: Vec<BranchName>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_delta_sup")]
    pub delta_sup: f64,
    #[serde(default = "default_delta_leak")]
    pub delta_leak: f64,
    #[serde(default = "default_delta_est")]
    pub delta_est: f64,
    #[serde(default = "default_delta_fail")]
    pub delta_fail: f64,
    #[serde(default)]
    pub time: Option<TimeConfig>,
    /// Number of seeds, random states or random pairs.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub m_meds: Vec<usize>,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Target accuracy for the resource calculator.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Extra slack on asserted distance bounds.
    #[serde(default)]
    pub slack: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_filters() -> Vec<FilterName> {
    vec![FilterName::Metropolis]
}

fn default_branches() -> Vec<BranchName> {
    vec![BranchName::L, BranchName::R]
}

fn default_mode() -> ModeName {
    ModeName::Exact
}

fn default_delta_sup() -> f64 {
    1e-3
}

fn default_delta_leak() -> f64 {
    1e-4
}

fn default_delta_est() -> f64 {
    1e-4
}

fn default_delta_fail() -> f64 {
    0.1
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        let problems = cfg.diagnostics();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Largest Hilbert-space dimension among the configured models.
    pub fn max_dim(&self) -> usize {
        self.models
            .iter()
            .map(|m| match *m {
                ModelConfig::Tfim { n1, n2, .. } => 1usize.checked_shl((n1 * n2) as u32).unwrap_or(usize::MAX),
                ModelConfig::Random { dim, .. } => dim,
                ModelConfig::Adversarial { qubits, .. } => 1usize.checked_shl(qubits).unwrap_or(usize::MAX),
            })
            .max()
            .unwrap_or(0)
    }

    /// Schema and range problems; empty when the config is runnable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let unit = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v > 0.0 && v < 1.0) {
                out.push(format!("{name} must lie in (0, 1), got {v}"));
            }
        };
        unit("delta_sup", self.delta_sup, &mut out);
        unit("delta_leak", self.delta_leak, &mut out);
        unit("delta_est", self.delta_est, &mut out);
        unit("delta_fail", self.delta_fail, &mut out);
        if self.delta_fail >= 0.5 {
            out.push("delta_fail must be below 1/2".into());
        }
        let needs_models =
            !matches!(self.experiment, Experiment::PolyCheck | Experiment::Resource | Experiment::Fidelity);
        if needs_models && self.models.is_empty() {
            out.push(format!("models: {} needs at least one model", self.experiment));
        }
        for m in &self.models {
            match *m {
                ModelConfig::Tfim { n1, n2, v } => {
                    if n1 == 0 || n2 == 0 || n1 * n2 > 6 {
                        out.push(format!("models: TFIM grid {n1}x{n2} must have between 1 and 6 sites"));
                    }
                    if !v.is_finite() {
                        out.push("models: TFIM field must be finite".into());
                    }
                }
                ModelConfig::Random { dim, count, min_gap } => {
                    if !(2..=MAX_DIM).contains(&dim) {
                        out.push(format!("models: random dim {dim} outside 2..={MAX_DIM}"));
                    }
                    if count == 0 {
                        out.push("models: random count must be positive".into());
                    }
                    if !(0.0..1.0).contains(&min_gap) {
                        out.push("models: min_gap must lie in [0, 1)".into());
                    }
                }
                ModelConfig::Adversarial { qubits, precision_bits } => {
                    if precision_bits == 0 || precision_bits > qubits || qubits > 6 {
                        out.push(format!(
                            "models: adversarial needs 1 <= precision_bits <= qubits <= 6, got {precision_bits} and {qubits}"
                        ));
                    }
                }
            }
        }
        if self.max_dim() > MAX_DIM {
            out.push(format!("SizeExceeded: dimension {} exceeds {MAX_DIM}", self.max_dim()));
        }
        for &b in &self.betas {
            if !(b >= 0.0 && b.is_finite()) {
                out.push(format!("betas: {b} is not a finite non-negative number"));
            }
        }
        let mut bits: Vec<(u32, u32)> = self.families.clone();
        if let (Some(n), Some(r)) = (self.n_range, self.r_range) {
            bits.push((n.1, r.1));
            if n.0 > n.1 || r.0 > r.1 {
                out.push("n_range and r_range must be ordered (lo, hi)".into());
            }
        }
        for (n, r) in bits {
            if n == 0 || r == 0 {
                out.push(format!("families: n and r must be positive, got ({n}, {r})"));
            }
            if n + r > MAX_BITS {
                out.push(format!("SizeExceeded: n + r = {} exceeds the {MAX_BITS}-bit budget", n + r));
            }
        }
        for &g in &self.gammas {
            if !(0.0..0.5).contains(&g) {
                out.push(format!("gammas: {g} outside [0, 1/2)"));
            }
        }
        for &a in &self.alphas {
            if !(0.0..=1.0).contains(&a) {
                out.push(format!("alphas: {a} outside [0, 1]"));
            }
        }
        for &m in &self.m_meds {
            if m % 2 == 0 {
                out.push(format!("m_meds: {m} must be odd"));
            }
        }
        for &k in &self.kappas {
            if !(k > 0.0 && k < 1.0) {
                out.push(format!("kappas: {k} outside (0, 1)"));
            }
        }
        for &d in &self.deltas {
            unit("deltas", d, &mut out);
        }
        let require = |ok: bool, field: &str, out: &mut Vec<String>| {
            if !ok {
                out.push(format!("{field}: required by {}", self.experiment));
            }
        };
        match self.experiment {
            Experiment::FixedPoint => require(!self.betas.is_empty(), "betas", &mut out),
            Experiment::GapSweep => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(!self.families.is_empty(), "families", &mut out);
                require(!self.gammas.is_empty(), "gammas", &mut out);
            }
            Experiment::Ensemble => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(
                    !self.families.is_empty() || (self.n_range.is_some() && self.r_range.is_some()),
                    "families",
                    &mut out,
                );
            }
            Experiment::EndToEnd => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(!self.families.is_empty(), "families", &mut out);
                require(!self.gammas.is_empty(), "gammas", &mut out);
                require(self.time.is_some(), "time", &mut out);
            }
            Experiment::Adversarial => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(!self.alphas.is_empty(), "alphas", &mut out);
                require(!self.m_meds.is_empty(), "m_meds", &mut out);
                if !self.models.iter().all(|m| matches!(m, ModelConfig::Adversarial { .. })) {
                    out.push("models: adversarial experiment takes adversarial models only".into());
                }
            }
            Experiment::PolyCheck => {
                require(!self.kappas.is_empty(), "kappas", &mut out);
                require(!self.deltas.is_empty(), "deltas", &mut out);
            }
            Experiment::Resource => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(!self.families.is_empty(), "families", &mut out);
                require(!self.gammas.is_empty(), "gammas", &mut out);
                require(self.eps.is_some(), "eps", &mut out);
                require(matches!(self.time, Some(TimeConfig::Fixed(_))), "time", &mut out);
            }
            Experiment::Povm => require(!self.families.is_empty(), "families", &mut out),
            Experiment::Fidelity => require(!self.betas.is_empty(), "betas", &mut out),
            Experiment::Perturbation => {
                require(!self.betas.is_empty(), "betas", &mut out);
                require(!self.families.is_empty(), "families", &mut out);
                require(!self.gammas.is_empty(), "gammas", &mut out);
                require(!self.deltas.is_empty(), "deltas", &mut out);
            }
        }
        if let Some(TimeConfig::Fixed(t) | TimeConfig::GapMultiple(t)) = self.time {
            if !(t >= 0.0 && t.is_finite()) {
                out.push(format!("time: {t} is not a finite non-negative number"));
            }
        }
        if let Some(e) = self.eps {
            unit("eps", e, &mut out);
        }
        out
    }
}

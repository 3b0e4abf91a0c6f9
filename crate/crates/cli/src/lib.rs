//! Config-driven experiment runner: CSV tables plus a JSON run manifest.

// `!(x <= tol)` is intentional: NaN must fail a tolerance check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use config::{ConfigError, ExperimentConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Named check. Only asserted checks gate the exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn assert(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), asserted: true, passed, detail }
    }

    pub fn note(name: &str, detail: String) -> Self {
        Check { name: name.into(), asserted: false, passed: true, detail }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.asserted && !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: &'static str,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub threads: usize,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
    pub errors: Vec<String>,
}

/// Run options resolved from flags and environment.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunResult {
    pub exit_code: i32,
    pub manifest: Option<RunManifest>,
    pub out_dir: Option<PathBuf>,
}

fn out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.to_string()))
}

/// Runs the experiment on a pool capped at `threads` workers.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> anyhow::Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| experiments::run_experiment(cfg))?)
}

pub fn run(config_path: &Path, opts: &RunOptions) -> anyhow::Result<RunResult> {
    let cfg = match ExperimentConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return Ok(RunResult { exit_code: EXIT_CONFIG, manifest: None, out_dir: None });
        }
    };
    run_config(cfg, opts)
}

pub fn run_config(cfg: ExperimentConfig, opts: &RunOptions) -> anyhow::Result<RunResult> {
    let dir = out_dir(&cfg, opts);
    std::fs::create_dir_all(&dir)?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    log::info!("running {} into {}", cfg.experiment, dir.display());

    let mut errors = Vec::new();
    let mut files = Vec::new();
    let mut checks = Vec::new();
    match execute(&cfg, opts.threads) {
        Ok(outcome) => {
            for t in &outcome.tables {
                t.write(&dir)?;
                files.push(FileEntry { file: t.file_name(), rows: t.rows.len() });
            }
            checks = outcome.checks;
        }
        Err(e) => {
            log::error!("experiment failed: {e}");
            errors.push(e.to_string());
            checks.push(Check::assert("experiment", false, e.to_string()));
        }
    }
    let failed_checks: Vec<String> =
        checks.iter().filter(|c| c.asserted && !c.passed).map(|c| c.name.clone()).collect();
    let passed = failed_checks.is_empty();
    let manifest = RunManifest {
        config: cfg,
        version: env!("CARGO_PKG_VERSION"),
        started_unix,
        wall_time_s: clock.elapsed().as_secs_f64(),
        threads: opts.threads.unwrap_or_else(rayon::current_num_threads),
        passed,
        failed_checks,
        checks,
        files,
        errors,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunResult {
        exit_code: if passed { EXIT_PASS } else { EXIT_ASSERTION },
        manifest: Some(manifest),
        out_dir: Some(dir),
    })
}

/// Diagnostics for `validate`. The first line is `ok` when the config is runnable.
pub fn validate(config_path: &Path) -> (i32, Vec<String>) {
    match ExperimentConfig::load(config_path) {
        Ok(cfg) => {
            let d = cfg.max_dim();
            let mut lines = vec!["ok".to_string(), format!("superoperator dimension: {}", d * d)];
            if let (Some(&(n, r)), Some(config::TimeConfig::Fixed(t))) = (cfg.families.first(), cfg.time) {
                let beta = cfg.betas.first().copied().unwrap_or(1.0);
                let gamma = cfg.gammas.iter().copied().find(|&g| g > 0.0).unwrap_or(0.1);
                if let Ok(e) = promised_davies_core::davies::resource_estimate(
                    n,
                    r,
                    gamma,
                    t,
                    cfg.delta_leak,
                    beta,
                    cfg.eps.unwrap_or(0.1),
                ) {
                    lines.push(format!("estimated Hamiltonian queries: {:.3e}", e.h_queries));
                }
            }
            (EXIT_PASS, lines)
        }
        Err(ConfigError::Invalid(problems)) => (EXIT_CONFIG, problems),
        Err(e) => (EXIT_CONFIG, vec![e.to_string()]),
    }
}

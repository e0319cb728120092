//! Per-seed training: optional K-fold evaluation, then a fit on every sample
//! whose logs and checkpoints are kept.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use mibo_core::csi::read_manifest;
use mibo_core::metrics::{
    evaluate_run, fit_convergence_slope, integer_feasibility_gap, kfold_evaluate, stationarity_series, EvalReport,
    FoldOutcome, MetricSummary, Summary,
};
use mibo_core::models::{save_checkpoint, Checkpoint, Selection, Standardizer, TaskData, TaskModel};
use mibo_core::solver::{train, Method, RunLogs, SolverConfig, SolverError, Task, TrainedRun};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// What a run was trained on. Runs are comparable iff fingerprints match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIdentity {
    pub path: String,
    pub seed: u64,
    pub num_samples: usize,
    pub n_subs: usize,
    /// SHA-256 over `h.bin`, `m.bin` and `p.bin`.
    pub fingerprint: String,
}

pub fn dataset_identity(dir: &Path) -> Result<DatasetIdentity> {
    let manifest = read_manifest(dir).with_context(|| format!("cannot read dataset at {}", dir.display()))?;
    let mut hasher = Sha256::new();
    for name in ["h.bin", "m.bin", "p.bin"] {
        let bytes = fs::read(dir.join(name)).with_context(|| format!("cannot read {}", dir.join(name).display()))?;
        hasher.update(&bytes);
    }
    let fingerprint = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(DatasetIdentity {
        path: dir.display().to_string(),
        seed: manifest.seed,
        num_samples: manifest.num_samples,
        n_subs: manifest.n_pairs * manifest.subcarriers,
        fingerprint,
    })
}

/// Log-log slopes of the running stationarity averages; `None` when a series
/// cannot be fitted (too short, or zero after burn-in).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub s_w: Option<f64>,
    pub s_u: Option<f64>,
    pub s_v: Option<f64>,
}

impl Slopes {
    pub fn of(run: &TrainedRun) -> Self {
        match stationarity_series(&run.history, &run.stationarity) {
            Ok(s) => Self {
                s_w: fit_convergence_slope(&s.s_w).ok(),
                s_u: fit_convergence_slope(&s.s_u).ok(),
                s_v: fit_convergence_slope(&s.s_v).ok(),
            },
            Err(_) => Self::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    /// Integer feasibility gap of the full-data fit.
    pub gap: f64,
    pub slopes: Slopes,
    pub final_loss_l: Option<f64>,
    pub final_loss_s: Option<f64>,
    /// Held-out metrics; absent when cross-validation is off.
    pub cv: Option<EvalReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub method: Method,
    pub task: Option<Task>,
    pub dataset: DatasetIdentity,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub per_seed: Vec<SeedReport>,
    /// Cross-validated metric means and full-data gaps, one value per seed.
    pub summary: EvalReport,
}

impl RunReport {
    pub fn new(
        method: Method,
        task: Option<Task>,
        dataset: DatasetIdentity,
        iterations: usize,
        folds: usize,
        per_seed: Vec<SeedReport>,
    ) -> Self {
        let label = run_label(method, task);
        let mut metrics: Vec<MetricSummary> = Vec::new();
        if let Some(first) = per_seed.first().and_then(|s| s.cv.as_ref()) {
            for m in &first.metrics {
                let values: Vec<f64> = per_seed
                    .iter()
                    .filter_map(|s| s.cv.as_ref().and_then(|cv| cv.metric(&m.name)).map(|x| x.mean))
                    .collect();
                metrics.push(MetricSummary { name: m.name.clone(), summary: Summary::of(values) });
            }
        }
        let seeds: Vec<u64> = per_seed.iter().map(|s| s.seed).collect();
        let summary = EvalReport {
            method: label.clone(),
            seeds: seeds.clone(),
            folds,
            metrics,
            gap: Summary::of(per_seed.iter().map(|s| s.gap).collect()),
        };
        Self { label, method, task, dataset, iterations, seeds, folds, per_seed, summary }
    }

    pub fn seed(&self, seed: u64) -> Option<&SeedReport> {
        self.per_seed.iter().find(|s| s.seed == seed)
    }
}

pub fn run_label(method: Method, task: Option<Task>) -> String {
    match task {
        Some(t) => format!("{}-{}", method.name(), t.name()),
        None => method.name().to_string(),
    }
}

/// Trains on `rows`, standardized with their own statistics.
fn fit(
    raw: &TaskData,
    rows: &[usize],
    config: &SolverConfig,
    method: Method,
    task: Option<Task>,
    logs: Option<&mut RunLogs>,
) -> Result<(TaskData, Standardizer, TrainedRun), SolverError> {
    let (data, standardizer) = raw.standardized(rows);
    let run = train(&data, rows, config, method, task, logs)?;
    Ok((data, standardizer, run))
}

/// Seed-`seed` K-fold evaluation, or `None` when `folds` is 0.
pub fn cross_validate(
    raw: &TaskData,
    config: &SolverConfig,
    method: Method,
    task: Option<Task>,
    seed: u64,
    folds: usize,
) -> Result<Option<EvalReport>> {
    if folds == 0 {
        return Ok(None);
    }
    let config = SolverConfig { seed, ..config.clone() };
    let report = kfold_evaluate(&run_label(method, task), raw.len(), folds, seed, |tr, te| {
        let (data, _, run) = fit(raw, tr, &config, method, task, None)?;
        Ok(FoldOutcome { metrics: evaluate_run(&run, &data, te)?, gap: integer_feasibility_gap(&run.gap_selection) })
    })?;
    Ok(Some(report))
}

fn save_model(dir: &Path, model: &TaskModel, w: &[f64], standardizer: &Standardizer) -> Result<()> {
    let ckpt = Checkpoint { model: model.clone(), selection: Selection::new(w.to_vec())?, standardizer: Some(standardizer.clone()) };
    save_checkpoint(&ckpt, dir).with_context(|| format!("cannot write checkpoint {}", dir.display()))?;
    Ok(())
}

/// Cross-validation plus the full-data fit of one seed. Logs and checkpoints
/// go to `seed_dir`.
pub fn run_seed(
    raw: &TaskData,
    config: &SolverConfig,
    method: Method,
    task: Option<Task>,
    seed: u64,
    folds: usize,
    seed_dir: &Path,
) -> Result<SeedReport> {
    let cv = cross_validate(raw, config, method, task, seed, folds)?;
    let config = SolverConfig { seed, ..config.clone() };
    let all: Vec<usize> = (0..raw.len()).collect();
    let mut logs = RunLogs::create(seed_dir, config.flush_every)
        .with_context(|| format!("cannot create logs in {}", seed_dir.display()))?;
    let (_, standardizer, run) = fit(raw, &all, &config, method, task, Some(&mut logs))
        .with_context(|| format!("seed {seed} failed"))?;
    logs.finish()?;
    if let Some((m, w)) = &run.localization {
        save_model(&seed_dir.join("loc"), m, w, &standardizer)?;
    }
    if let Some((m, w)) = &run.sensing {
        save_model(&seed_dir.join("sen"), m, w, &standardizer)?;
    }
    let last = run.history.last();
    Ok(SeedReport {
        seed,
        gap: integer_feasibility_gap(&run.gap_selection),
        slopes: Slopes::of(&run),
        final_loss_l: run.localization.as_ref().and(last).map(|h| h.loss_l),
        final_loss_s: run.sensing.as_ref().and(last).map(|h| h.loss_s),
        cv,
    })
}

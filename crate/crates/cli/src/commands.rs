use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use mibo_core::csi::{generate_dataset, load_dataset, save_dataset, DatasetManifest};
use mibo_core::fsio::{fmt_f64, write_atomic};
use mibo_core::metrics::render_table;
use mibo_core::models::{load_checkpoint, TaskData};
use mibo_core::solver::{read_history, Method, Task};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, ConfigError};
use crate::pipeline::{dataset_identity, run_label, run_seed, DatasetIdentity, RunReport, SeedReport};

type CmdResult<T> = Result<T, CliError>;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Simulates the configured scenario into `out`. The dataset seed is
/// `seed` if given, else `run.dataset_seed`.
pub fn simulate(config: &RunConfig, seed: Option<u64>, out: &Path, force: bool) -> CmdResult<DatasetManifest> {
    if out.join("manifest.json").exists() && !force {
        return Err(anyhow!("{} already holds a dataset; pass --force to overwrite", out.display()).into());
    }
    let seed = seed.unwrap_or(config.run.dataset_seed);
    let ds = generate_dataset(&config.scenario, seed).context("simulation failed")?;
    let manifest = save_dataset(&ds, out).with_context(|| format!("cannot write dataset to {}", out.display()))?;
    Ok(manifest)
}

/// `run.json`: everything needed to reproduce a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub label: String,
    pub method: Method,
    pub task: Option<Task>,
    pub dataset: DatasetIdentity,
    pub config: RunConfig,
}

fn prepare_run_dir(out: &Path, force: bool) -> anyhow::Result<()> {
    if out.join("run.json").exists() {
        if !force {
            bail!("{} already holds a run; pass --force to overwrite", out.display());
        }
        fs::remove_dir_all(out).with_context(|| format!("cannot clear {}", out.display()))?;
    } else if out.is_dir() && fs::read_dir(out)?.next().is_some() {
        bail!("{} exists and is not a run directory", out.display());
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(())
}

pub struct TrainRequest<'a> {
    pub method: Method,
    pub task: Option<Task>,
    pub dataset: &'a Path,
    pub out: &'a Path,
    pub force: bool,
    pub jobs: usize,
}

/// One run per configured seed, `jobs` at a time. `report.json` is written
/// last, so its presence marks a complete run.
pub fn train(config: &RunConfig, req: &TrainRequest<'_>) -> CmdResult<RunReport> {
    match (req.method, req.task) {
        (Method::SingleTask, None) => {
            return Err(ConfigError::Invalid("single-task training needs --task loc or --task sen".into()).into())
        }
        (Method::SpgMibo | Method::Penalty, Some(_)) => {
            return Err(ConfigError::Invalid(format!("--task only applies to single-task, not {}", req.method.name())).into())
        }
        _ => {}
    }
    let ds = load_dataset(req.dataset).with_context(|| format!("cannot load dataset from {}", req.dataset.display()))?;
    config.solver.validate(ds.n_subs()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if config.run.folds > ds.len() {
        return Err(ConfigError::Invalid(format!("{} folds exceed the {} samples", config.run.folds, ds.len())).into());
    }
    let identity = dataset_identity(req.dataset)?;
    let raw = TaskData::from_dataset(&ds, config.solver.sensing_mode);

    prepare_run_dir(req.out, req.force)?;
    let manifest = RunManifest {
        label: run_label(req.method, req.task),
        method: req.method,
        task: req.task,
        dataset: identity.clone(),
        config: config.clone(),
    };
    write_atomic(&req.out.join("run.json"), to_json(&manifest).as_bytes()).context("cannot write run.json")?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(req.jobs.max(1))
        .build()
        .map_err(|e| anyhow!("cannot start worker pool: {e}"))?;
    let per_seed: Vec<SeedReport> = pool.install(|| {
        config
            .run
            .seeds
            .par_iter()
            .map(|&seed| {
                let dir = req.out.join(format!("seed-{seed}"));
                run_seed(&raw, &config.solver, req.method, req.task, seed, config.run.folds, &dir)
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let report = RunReport::new(req.method, req.task, identity, config.solver.iterations, config.run.folds, per_seed);
    write_atomic(&req.out.join("report.txt"), render_run(&report).as_bytes()).context("cannot write report.txt")?;
    write_atomic(&req.out.join("report.json"), to_json(&report).as_bytes()).context("cannot write report.json")?;
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "-".into())
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Text rendering of a run report: summary table, then one row per seed.
pub fn render_run(report: &RunReport) -> String {
    let mut out = format!(
        "run: {}\ndataset: {} ({} samples, {} subcarriers)\niterations: {}, folds: {}\n\n",
        report.label,
        report.dataset.path,
        report.dataset.num_samples,
        report.dataset.n_subs,
        report.iterations,
        report.folds
    );
    out.push_str(&render_table(std::slice::from_ref(&report.summary)));
    out.push('\n');
    let mut rows = vec![["seed", "gap", "loss_l", "loss_s", "slope_S_w", "slope_S_u", "slope_S_v"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for s in &report.per_seed {
        rows.push(vec![
            s.seed.to_string(),
            fmt_f64(s.gap),
            opt(s.final_loss_l),
            opt(s.final_loss_s),
            opt(s.slopes.s_w),
            opt(s.slopes.s_u),
            opt(s.slopes.s_v),
        ]);
    }
    out.push_str(&align(&rows));
    out
}

pub fn load_report(run_dir: &Path) -> anyhow::Result<RunReport> {
    let path = run_dir.join("report.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("{} is not a complete run (no report.json)", run_dir.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Seed-paired comparison of one quantity between two runs. Negative
/// `mean_delta` means the first run is lower.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedStat {
    pub quantity: String,
    pub seeds: Vec<u64>,
    /// Seeds on which the first run is better (lower, or higher for accuracy).
    pub first_wins: usize,
    pub second_wins: usize,
    pub mean_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub first: String,
    pub second: String,
    pub stats: Vec<PairedStat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunColumn {
    pub run: String,
    pub label: String,
    pub summary: mibo_core::metrics::EvalReport,
    pub slope_s_w: Option<f64>,
    pub slope_s_u: Option<f64>,
    pub slope_s_v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: DatasetIdentity,
    pub runs: Vec<RunColumn>,
    pub pairs: Vec<Pairing>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-seed value of `quantity`: `gap` or a cross-validated metric mean.
fn seed_value(s: &SeedReport, quantity: &str) -> Option<f64> {
    if quantity == "gap" {
        Some(s.gap)
    } else {
        s.cv.as_ref().and_then(|cv| cv.metric(quantity)).map(|m| m.mean)
    }
}

fn pair(a: &RunReport, b: &RunReport) -> Vec<PairedStat> {
    let mut quantities: Vec<String> =
        a.summary.metrics.iter().map(|m| m.name.clone()).filter(|n| b.summary.metric(n).is_some()).collect();
    quantities.push("gap".into());
    quantities
        .into_iter()
        .map(|q| {
            let higher_better = q.ends_with("_acc");
            let mut seeds = Vec::new();
            let (mut first_wins, mut second_wins, mut delta) = (0, 0, 0.0);
            for sa in &a.per_seed {
                let Some(sb) = b.seed(sa.seed) else { continue };
                let (Some(va), Some(vb)) = (seed_value(sa, &q), seed_value(sb, &q)) else { continue };
                seeds.push(sa.seed);
                delta += va - vb;
                let (better, worse) = if higher_better { (va > vb, va < vb) } else { (va < vb, va > vb) };
                first_wins += usize::from(better);
                second_wins += usize::from(worse);
            }
            let mean_delta = if seeds.is_empty() { 0.0 } else { delta / seeds.len() as f64 };
            PairedStat { quantity: q, seeds, first_wins, second_wins, mean_delta }
        })
        .collect()
}

/// Compares runs trained on the same dataset.
pub fn compare(run_dirs: &[PathBuf]) -> CmdResult<Comparison> {
    if run_dirs.len() < 2 {
        return Err(anyhow!("compare needs at least two run directories").into());
    }
    let reports: Vec<RunReport> = run_dirs.iter().map(|d| load_report(d)).collect::<anyhow::Result<_>>()?;
    let dataset = reports[0].dataset.clone();
    for (r, d) in reports.iter().zip(run_dirs).skip(1) {
        if r.dataset.fingerprint != dataset.fingerprint {
            return Err(anyhow!(
                "incompatible datasets: {} used {} but {} used {}",
                run_dirs[0].display(),
                dataset.path,
                d.display(),
                r.dataset.path
            )
            .into());
        }
    }
    let runs = reports
        .iter()
        .zip(run_dirs)
        .map(|(r, d)| RunColumn {
            run: d.display().to_string(),
            label: r.label.clone(),
            summary: r.summary.clone(),
            slope_s_w: mean_of(r.per_seed.iter().map(|s| s.slopes.s_w)),
            slope_s_u: mean_of(r.per_seed.iter().map(|s| s.slopes.s_u)),
            slope_s_v: mean_of(r.per_seed.iter().map(|s| s.slopes.s_v)),
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            pairs.push(Pairing {
                first: run_dirs[i].display().to_string(),
                second: run_dirs[j].display().to_string(),
                stats: pair(&reports[i], &reports[j]),
            });
        }
    }
    Ok(Comparison { dataset, runs, pairs })
}

pub fn render_comparison(c: &Comparison) -> String {
    let mut out = format!("dataset: {} ({})\n\n", c.dataset.path, c.dataset.fingerprint);
    let summaries: Vec<_> = c
        .runs
        .iter()
        .map(|r| mibo_core::metrics::EvalReport { method: r.run.clone(), ..r.summary.clone() })
        .collect();
    out.push_str(&render_table(&summaries));
    out.push('\n');
    let mut rows = vec![vec!["run".to_string(), "label".into(), "slope_S_w".into(), "slope_S_u".into(), "slope_S_v".into()]];
    for r in &c.runs {
        rows.push(vec![r.run.clone(), r.label.clone(), opt(r.slope_s_w), opt(r.slope_s_u), opt(r.slope_s_v)]);
    }
    out.push_str(&align(&rows));
    for p in &c.pairs {
        let _ = writeln!(out, "\n{} vs {}", p.first, p.second);
        let mut rows = vec![vec!["quantity".to_string(), "seeds".into(), "first_wins".into(), "second_wins".into(), "mean_delta".into()]];
        for s in &p.stats {
            rows.push(vec![
                s.quantity.clone(),
                s.seeds.len().to_string(),
                s.first_wins.to_string(),
                s.second_wins.to_string(),
                fmt_f64(s.mean_delta),
            ]);
        }
        out.push_str(&align(&rows));
    }
    out
}

pub fn write_comparison(c: &Comparison, out: &Path) -> CmdResult<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_atomic(&out.join("comparison.txt"), render_comparison(c).as_bytes()).context("cannot write comparison")?;
    write_atomic(&out.join("comparison.json"), to_json(c).as_bytes()).context("cannot write comparison")?;
    Ok(())
}

/// Counts of `w` in ten equal bins over `[0, 1]`; 1.0 falls in the last bin.
pub fn histogram10(w: &[f64]) -> [usize; 10] {
    let mut bins = [0; 10];
    for &v in w {
        bins[((v * 10.0).floor().max(0.0) as usize).min(9)] += 1;
    }
    bins
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub losses_csv: PathBuf,
    pub rows: usize,
    pub histogram: [usize; 10],
}

/// Exports `iter,loss_l,loss_s,J,G` per seed to `<out>/losses-seed-N.csv`
/// and summarises the selection of each seed.
pub fn report(run_dir: &Path, out: &Path) -> CmdResult<(RunReport, Vec<SeedSummary>)> {
    let report = load_report(run_dir)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut summaries = Vec::new();
    for s in &report.per_seed {
        let seed_dir = run_dir.join(format!("seed-{}", s.seed));
        let history = read_history(&seed_dir.join("history.csv"))
            .with_context(|| format!("incomplete run: cannot read {}", seed_dir.join("history.csv").display()))?;
        let mut csv = String::from("iter,loss_l,loss_s,J,G\n");
        for h in &history {
            let _ = writeln!(csv, "{},{},{},{},{}", h.iter, fmt_f64(h.loss_l), fmt_f64(h.loss_s), fmt_f64(h.j), fmt_f64(h.g));
        }
        let path = out.join(format!("losses-seed-{}.csv", s.seed));
        write_atomic(&path, csv.as_bytes()).with_context(|| format!("cannot write {}", path.display()))?;
        let ckpt_dir = ["loc", "sen"].iter().map(|t| seed_dir.join(t)).find(|d| d.join("manifest.json").exists());
        let ckpt_dir = ckpt_dir.ok_or_else(|| anyhow!("incomplete run: no checkpoint in {}", seed_dir.display()))?;
        let ckpt = load_checkpoint(&ckpt_dir).with_context(|| format!("cannot load {}", ckpt_dir.display()))?;
        summaries.push(SeedSummary {
            seed: s.seed,
            losses_csv: path,
            rows: history.len(),
            histogram: histogram10(ckpt.selection.relaxed()),
        });
    }
    Ok((report, summaries))
}

pub fn render_report(report: &RunReport, seeds: &[SeedSummary]) -> String {
    let mut out = render_run(report);
    out.push_str("\nselection histogram (10 bins over [0, 1])\n");
    for s in seeds {
        let counts: Vec<String> = s.histogram.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "seed {}: {}", s.seed, counts.join(" "));
    }
    for s in seeds {
        let _ = writeln!(out, "losses: {} ({} rows)", s.losses_csv.display(), s.rows);
    }
    out
}

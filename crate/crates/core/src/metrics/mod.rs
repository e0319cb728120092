//! Evaluation metrics, stationarity diagnostics and K-fold evaluation.

mod report;

pub use report::{render_table, EvalReport, MetricSummary, Summary};

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::models::{round_selection, ModelError, SelectionParam, SensingMode, TaskData};
use crate::solver::{rng_stream, HistoryRecord, SolverError, StationarityRecord, TrainedRun};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `‖w̄ - round(w̄)‖₂ / max(‖round(w̄)‖₂, 1)`, ties at 1/2 rounding down.
pub fn integer_feasibility_gap(w: &[f64]) -> f64 {
    let r = round_selection(w);
    let num: f64 = w.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    num / den
}

/// `(1/t) Σ_{k ≤ t} v_k` for every prefix.
pub fn running_average(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Running averages of `‖Δw̄‖²`, `‖∇_θ L‖²` and `‖∇_dual L‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaritySeries {
    pub s_w: Vec<f64>,
    pub s_u: Vec<f64>,
    pub s_v: Vec<f64>,
}

pub fn stationarity_series(
    history: &[HistoryRecord],
    stationarity: &[StationarityRecord],
) -> Result<StationaritySeries, MetricsError> {
    if history.is_empty() {
        return Err(MetricsError::InvalidInput("empty history".into()));
    }
    if history.len() != stationarity.len() {
        return Err(MetricsError::Shape(format!(
            "{} history rows but {} gradient-norm rows",
            history.len(),
            stationarity.len()
        )));
    }
    let dw: Vec<f64> = history.iter().map(|h| h.delta_w_sq).collect();
    let du: Vec<f64> = stationarity.iter().map(|s| s.grad_u_sq).collect();
    let dv: Vec<f64> = stationarity.iter().map(|s| s.grad_v_sq).collect();
    Ok(StationaritySeries { s_w: running_average(&dw), s_u: running_average(&du), s_v: running_average(&dv) })
}

/// Least-squares slope of `ln S(t)` against `ln t` (t from 1) after dropping
/// the first 10% of points. Only the fitted points must be positive.
pub fn fit_convergence_slope(series: &[f64]) -> Result<f64, MetricsError> {
    if series.len() < 20 {
        return Err(MetricsError::InvalidInput(format!("{} points, need at least 20", series.len())));
    }
    let burn = series.len() / 10;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .skip(burn)
        .map(|(i, &v)| {
            if v > 0.0 && v.is_finite() {
                Ok((((i + 1) as f64).ln(), v.ln()))
            } else {
                Err(MetricsError::InvalidInput(format!("value {v} at t = {} is not positive", i + 1)))
            }
        })
        .collect::<Result<_, _>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Ground truth for [`task_metric`].
#[derive(Clone, Debug)]
pub enum MetricTargets<'a> {
    /// Regression targets; the metric is MSE.
    Values(&'a Tensor),
    /// Class labels; the metric is top-1 accuracy of the prediction rows.
    Labels(&'a [usize]),
}

pub fn task_metric(predictions: &Tensor, targets: MetricTargets<'_>) -> Result<f64, MetricsError> {
    match targets {
        MetricTargets::Values(t) => {
            if t.shape() != predictions.shape() || t.is_empty() {
                return Err(MetricsError::Shape(format!("{:?} vs {:?}", predictions.shape(), t.shape())));
            }
            let sum: f64 = predictions.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(sum / t.len() as f64)
        }
        MetricTargets::Labels(labels) => {
            let (rows, classes) = predictions.dims2();
            if rows != labels.len() || rows == 0 {
                return Err(MetricsError::Shape(format!("{rows} prediction rows, {} labels", labels.len())));
            }
            if let Some(l) = labels.iter().find(|&&l| l >= classes) {
                return Err(MetricsError::Shape(format!("label {l} out of range for {classes} classes")));
            }
            let correct = predictions
                .data()
                .chunks_exact(classes)
                .zip(labels)
                .filter(|(row, &l)| {
                    let arg = row
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                        .0;
                    arg == l
                })
                .count();
            Ok(correct as f64 / rows as f64)
        }
    }
}

/// Held-out metrics of a trained run: `loc_mse` and `sen_mse` or `sen_acc`.
pub fn evaluate_run(run: &TrainedRun, data: &TaskData, rows: &[usize]) -> Result<Vec<(String, f64)>, MetricsError> {
    let batch = data.batch(rows)?;
    let mut out = Vec::new();
    if let Some((model, w)) = &run.localization {
        let pred = model.predict(SelectionParam::Relaxed(w), &batch.x)?;
        out.push(("loc_mse".to_string(), task_metric(&pred, MetricTargets::Values(&batch.positions))?));
    }
    if let Some((model, w)) = &run.sensing {
        let pred = model.predict(SelectionParam::Relaxed(w), &batch.x)?;
        match (data.sensing_mode, &batch.sensing) {
            (SensingMode::Regression, crate::models::SensingTargets::Values(t)) => {
                out.push(("sen_mse".to_string(), task_metric(&pred, MetricTargets::Values(t))?));
            }
            (_, crate::models::SensingTargets::Classes(labels)) => {
                out.push(("sen_acc".to_string(), task_metric(&pred, MetricTargets::Labels(labels))?));
            }
            _ => return Err(MetricsError::InvalidInput("sensing targets do not match the mode".into())),
        }
    }
    Ok(out)
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds; the first `n % k`
/// folds hold one extra row.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MetricsError> {
    if k < 2 {
        return Err(MetricsError::InvalidInput(format!("k = {k}, need at least 2 folds")));
    }
    if k > n {
        return Err(MetricsError::InvalidInput(format!("k = {k} exceeds the {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_stream(seed, 0));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Metrics and selection of one fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub metrics: Vec<(String, f64)>,
    pub gap: f64,
}

/// Runs `trainer(train_rows, test_rows)` on every fold of a seeded K-fold
/// split and aggregates the results.
pub fn kfold_evaluate<F>(
    method: &str,
    n: usize,
    k: usize,
    seed: u64,
    mut trainer: F,
) -> Result<EvalReport, MetricsError>
where
    F: FnMut(&[usize], &[usize]) -> Result<FoldOutcome, MetricsError>,
{
    let folds = kfold_splits(n, k, seed)?;
    let mut outcomes = Vec::with_capacity(k);
    for (i, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, f)| f.iter().copied()).collect();
        outcomes.push(trainer(&train, test)?);
    }
    EvalReport::from_folds(method, vec![seed], &outcomes)
}

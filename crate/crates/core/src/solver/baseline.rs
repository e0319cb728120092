use super::config::SolverConfig;
use super::history::{HistoryRecord, StationarityRecord};
use super::prox::{penalty_grad, regularizer_g, step_size};
use super::sampler::{rng_stream, BatchSampler};
use super::spg::{axpy, check_finite, localization_model, sensing_model, sq_norm, STREAM_BATCHES};
use super::{blame, RunLogs, SolverError, Task, TrainedRun};
use crate::autodiff::sigmoid;
use crate::models::{LossGrad, SelectionParam, TaskData, TaskModel};

fn sigmoid_all(raw: &[f64]) -> Vec<f64> {
    raw.iter().map(|&r| sigmoid(r)).collect()
}

/// Gradient of `λ_p Σ (1 - w) w` with respect to the raw logits of `w = σ(raw)`.
fn raw_penalty_grad(raw: &[f64], lambda_p: f64) -> Vec<f64> {
    let w = sigmoid_all(raw);
    penalty_grad(&w, lambda_p).iter().zip(&w).map(|(g, w)| g * w * (1.0 - w)).collect()
}

/// Localization model, sensing model, selection, history, stationarity.
type SgdOutcome = (Option<TaskModel>, Option<TaskModel>, Vec<f64>, Vec<HistoryRecord>, Vec<StationarityRecord>);

/// Plain SGD on task losses plus the integrality penalty, with a sigmoid
/// selection shared by all trained models (one model for single-task runs).
fn run_sgd(
    data: &TaskData,
    train_rows: &[usize],
    config: &SolverConfig,
    mut loc: Option<TaskModel>,
    mut sen: Option<TaskModel>,
    mut logs: Option<&mut RunLogs>,
) -> Result<SgdOutcome, SolverError> {
    config.validate(data.n_subs)?;
    if train_rows.is_empty() {
        return Err(SolverError::InvalidInput("no training rows".into()));
    }
    let mut raw = vec![0.0; data.n_subs];
    let mut sampler = BatchSampler::new(train_rows, config.batch_size, rng_stream(config.seed, STREAM_BATCHES));
    let mut history = Vec::with_capacity(config.iterations);
    let mut stationarity = Vec::with_capacity(config.iterations);
    for t in 1..=config.iterations {
        let eta_t = step_size(config.eta, t);
        let batch = data.batch(&sampler.next_rows())?;
        let mut graw = raw_penalty_grad(&raw, config.lambda_p);
        let mut grad_u_sq = 0.0;
        let mut step = |model: &mut Option<TaskModel>, block: &'static str| -> Result<f64, SolverError> {
            let Some(m) = model.as_mut() else { return Ok(0.0) };
            let LossGrad { loss, theta, selection } =
                m.loss_grad(SelectionParam::Sigmoid(&raw), &batch).map_err(|e| blame(block, t)(e.into()))?;
            check_finite(&theta, block, t)?;
            check_finite(&selection, "w", t)?;
            axpy(&mut graw, 1.0, &selection);
            grad_u_sq += sq_norm(&theta);
            axpy(m.theta_mut(), -eta_t, &theta);
            Ok(loss)
        };
        let loss_l = step(&mut loc, "theta1")?;
        let loss_s = step(&mut sen, "theta2")?;
        let w_old = sigmoid_all(&raw);
        axpy(&mut raw, -eta_t, &graw);
        let w = sigmoid_all(&raw);
        history.push(HistoryRecord {
            iter: t,
            eta_t,
            loss_s,
            loss_l,
            j: 0.0,
            g: regularizer_g(&w)?,
            delta_w_sq: w.iter().zip(&w_old).map(|(a, b)| (a - b) * (a - b)).sum(),
            num_planes: 0,
            mu1: 0.0,
            mu2: 0.0,
            lambda_sum: 0.0,
        });
        stationarity.push(StationarityRecord { iter: t, grad_u_sq, grad_v_sq: 0.0, grad_v_proj_sq: 0.0 });
        if let Some(logs) = logs.as_deref_mut() {
            logs.push(history.last().unwrap(), stationarity.last().unwrap())?;
        }
    }
    Ok((loc, sen, sigmoid_all(&raw), history, stationarity))
}

/// Both tasks trained by SGD with a shared sigmoid-parameterized selection
/// and the quadratic penalty `λ_p Σ (1 - w) w`.
pub fn run_penalty_baseline(
    data: &TaskData,
    train_rows: &[usize],
    config: &SolverConfig,
    logs: Option<&mut RunLogs>,
) -> Result<TrainedRun, SolverError> {
    let loc = localization_model(data, config)?;
    let sen = sensing_model(data, config)?;
    let (loc, sen, w, history, stationarity) = run_sgd(data, train_rows, config, Some(loc), Some(sen), logs)?;
    Ok(TrainedRun {
        localization: loc.map(|m| (m, w.clone())),
        sensing: sen.map(|m| (m, w.clone())),
        gap_selection: w,
        history,
        stationarity,
    })
}

/// One task alone, with its own selection vector and the same penalty.
pub fn run_single_task(
    data: &TaskData,
    train_rows: &[usize],
    task: Task,
    config: &SolverConfig,
    logs: Option<&mut RunLogs>,
) -> Result<TrainedRun, SolverError> {
    let (loc, sen) = match task {
        Task::Localization => (Some(localization_model(data, config)?), None),
        Task::Sensing => (None, Some(sensing_model(data, config)?)),
    };
    let (loc, sen, w, history, stationarity) = run_sgd(data, train_rows, config, loc, sen, logs)?;
    Ok(TrainedRun {
        localization: loc.map(|m| (m, w.clone())),
        sensing: sen.map(|m| (m, w.clone())),
        gap_selection: w,
        history,
        stationarity,
    })
}

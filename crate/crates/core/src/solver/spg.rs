use super::config::{GapSnapshot, SolverConfig};
use super::history::{HistoryRecord, StationarityRecord};
use super::polytope::{update_polytope, PlaneRule, Polytope};
use super::prox::{prox, regularizer_g, regularizer_g_grad, step_size};
use super::sampler::{rng_stream, BatchSampler};
use super::{blame, RunLogs, SolverError};
use crate::models::{Batch, HeadKind, SelectionParam, SensingMode, TaskData, TaskModel};

pub(crate) const STREAM_THETA1: u64 = 1;
pub(crate) const STREAM_THETA2: u64 = 2;
pub(crate) const STREAM_BATCHES: u64 = 3;
pub(crate) const STREAM_EVAL: u64 = 4;

pub(crate) fn localization_model(data: &TaskData, config: &SolverConfig) -> Result<TaskModel, SolverError> {
    let mut rng = rng_stream(config.seed, STREAM_THETA1);
    Ok(TaskModel::new(data.width, &config.hidden, 2, HeadKind::Position, data.n_subs, &mut rng)?)
}

pub(crate) fn sensing_model(data: &TaskData, config: &SolverConfig) -> Result<TaskModel, SolverError> {
    let head = match config.sensing_mode {
        SensingMode::Regression => HeadKind::Regression,
        SensingMode::Classification => HeadKind::Classification,
    };
    let mut rng = rng_stream(config.seed, STREAM_THETA2);
    Ok(TaskModel::new(data.width, &config.hidden, data.sensing_outputs(), head, data.n_subs, &mut rng)?)
}

pub(crate) fn check_finite(values: &[f64], block: &'static str, iter: usize) -> Result<(), SolverError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SolverError::NonFinite { block, iter })
    }
}

pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Live iterate of the solver.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub theta1: TaskModel,
    pub theta2: TaskModel,
    pub w: Vec<f64>,
    pub polytope: Polytope,
    pub mu1: f64,
    pub mu2: f64,
    /// Iterations completed.
    pub t: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub epsilon: f64,
    pub history: Vec<HistoryRecord>,
    pub stationarity: Vec<StationarityRecord>,
    /// Lowest evaluation loss seen and the selection that produced it.
    pub best_eval: Option<(f64, Vec<f64>)>,
}

impl SolverState {
    /// Selection the feasibility gap is reported on.
    pub fn gap_selection(&self, snapshot: GapSnapshot) -> &[f64] {
        match (snapshot, &self.best_eval) {
            (GapSnapshot::BestEval, Some((_, w))) => w,
            _ => &self.w,
        }
    }
}

/// Builds the initial iterate: fresh networks, `w̄ = 1/2`, empty polytope,
/// zero duals. An unset `ε` is resolved against `L_l` over `train_rows`.
pub fn init_state(data: &TaskData, train_rows: &[usize], config: &SolverConfig) -> Result<SolverState, SolverError> {
    let (n_min, n_max) = config.validate(data.n_subs)?;
    if train_rows.is_empty() {
        return Err(SolverError::InvalidInput("no training rows".into()));
    }
    let theta1 = localization_model(data, config)?;
    let theta2 = sensing_model(data, config)?;
    let w = vec![0.5; data.n_subs];
    let epsilon = match config.epsilon {
        Some(e) => e,
        None => config.epsilon_scale * theta1.loss(SelectionParam::Relaxed(&w), &data.batch(train_rows)?)?,
    };
    Ok(SolverState {
        theta1,
        theta2,
        w,
        polytope: Polytope::new(),
        mu1: 0.0,
        mu2: 0.0,
        t: 0,
        n_min,
        n_max,
        epsilon,
        history: Vec::new(),
        stationarity: Vec::new(),
        best_eval: None,
    })
}

/// Result of the K-step lower-level descent.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerEstimate {
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub loss: f64,
}

/// One gradient step on `L_l` over `(θ1, w̄)` per batch in `batches`, on a
/// copy of the inputs, followed by `L̂_l` on `eval`. `w̄` is kept in `[0, 1]`.
pub fn estimate_lower_optimum(
    theta1: &TaskModel,
    w: &[f64],
    batches: &[Batch],
    eval: &Batch,
    step: f64,
) -> Result<LowerEstimate, SolverError> {
    if batches.is_empty() {
        return Err(SolverError::InvalidInput("lower-level estimate needs at least one step".into()));
    }
    let mut model = theta1.clone();
    let mut w = w.to_vec();
    for batch in batches {
        let g = model.loss_grad(SelectionParam::Relaxed(&w), batch)?;
        axpy(model.theta_mut(), -step, &g.theta);
        for (wi, gi) in w.iter_mut().zip(&g.selection) {
            *wi = (*wi - step * gi).clamp(0.0, 1.0);
        }
    }
    let loss = model.loss(SelectionParam::Relaxed(&w), eval)?;
    Ok(LowerEstimate { theta: model.theta().to_vec(), w, loss })
}

/// `(L_l(w̄, θ1) - L̂_l)²` on `batch`.
pub fn j_value(theta1: &TaskModel, w: &[f64], batch: &Batch, l_hat: f64) -> Result<f64, SolverError> {
    let l = theta1.loss(SelectionParam::Relaxed(w), batch)?;
    Ok((l - l_hat).powi(2))
}

/// `J` with its gradients, plus the `L_l` it was computed from.
#[derive(Clone, Debug)]
pub struct JEval {
    pub j: f64,
    pub loss_l: f64,
    pub grad_w: Vec<f64>,
    pub grad_theta1: Vec<f64>,
}

pub fn j_value_grad(theta1: &TaskModel, w: &[f64], batch: &Batch, l_hat: f64) -> Result<JEval, SolverError> {
    let g = theta1.loss_grad(SelectionParam::Relaxed(w), batch)?;
    let scale = 2.0 * (g.loss - l_hat);
    Ok(JEval {
        j: (g.loss - l_hat).powi(2),
        loss_l: g.loss,
        grad_w: g.selection.iter().map(|v| scale * v).collect(),
        grad_theta1: g.theta.iter().map(|v| scale * v).collect(),
    })
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

/// `L_s + Σ λ_l (a_l·w̄ + b_l·θ1 + c_l) + μ1 (N_min - ‖w̄‖₁) + μ2 (‖w̄‖₁ - N_max) + G(w̄)`.
pub fn lagrangian(state: &SolverState, batch: &Batch) -> Result<f64, SolverError> {
    let ls = state.theta2.loss(SelectionParam::Relaxed(&state.w), batch)?;
    let planes: f64 = state.polytope.planes.iter().map(|p| p.lambda * p.value(&state.w, state.theta1.theta())).sum();
    let norm = l1(&state.w);
    Ok(ls
        + planes
        + state.mu1 * (state.n_min as f64 - norm)
        + state.mu2 * (norm - state.n_max as f64)
        + regularizer_g(&state.w)?)
}

/// Gradient of [`lagrangian`] with respect to the primal blocks.
#[derive(Clone, Debug)]
pub struct LagrangianGrad {
    pub loss_s: f64,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub w: Vec<f64>,
}

/// With `include_regularizer = false` the `G` term is left out of the `w̄`
/// gradient, as the proximal step accounts for it.
pub fn lagrangian_gradient(
    state: &SolverState,
    batch: &Batch,
    include_regularizer: bool,
) -> Result<LagrangianGrad, SolverError> {
    let g = state.theta2.loss_grad(SelectionParam::Relaxed(&state.w), batch)?;
    let mut gw = g.selection;
    let mut g1 = vec![0.0; state.theta1.n_params()];
    for plane in &state.polytope.planes {
        axpy(&mut gw, plane.lambda, &plane.a);
        axpy(&mut g1, plane.lambda, &plane.b);
    }
    for (gi, wi) in gw.iter_mut().zip(&state.w) {
        // d‖w̄‖₁/dw = sign(w), which is 1 inside the box
        let s = if *wi < 0.0 { -1.0 } else { 1.0 };
        *gi += s * (state.mu2 - state.mu1);
    }
    if include_regularizer {
        axpy(&mut gw, 1.0, &regularizer_g_grad(&state.w));
    }
    Ok(LagrangianGrad { loss_s: g.loss, theta1: g1, theta2: g.theta, w: gw })
}

/// Quantities of one [`spg_step`] needed by callers.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub eta_t: f64,
    pub loss_s: f64,
    pub delta_w_sq: f64,
}

/// One stochastic proximal gradient iteration at step `η/√t`: primal
/// descent with the `w̄` prox, projected dual ascent, all gradients taken at
/// the incoming iterate. Appends a history row whose `loss_l`, `J` and plane
/// columns are completed by the caller once the polytope is updated.
pub fn spg_step(state: &mut SolverState, batch: &Batch, eta: f64, t: usize) -> Result<StepInfo, SolverError> {
    if t == 0 {
        return Err(SolverError::InvalidInput("iterations are numbered from 1".into()));
    }
    let eta_t = step_size(eta, t);
    let g = lagrangian_gradient(state, batch, false).map_err(blame("theta2", t))?;
    check_finite(&g.theta1, "theta1", t)?;
    check_finite(&g.theta2, "theta2", t)?;
    check_finite(&g.w, "w", t)?;

    let plane_values: Vec<f64> =
        state.polytope.planes.iter().map(|p| p.value(&state.w, state.theta1.theta())).collect();
    check_finite(&plane_values, "lambda", t)?;
    let norm = l1(&state.w);
    let c1 = state.n_min as f64 - norm;
    let c2 = norm - state.n_max as f64;
    let grad_v_sq = sq_norm(&plane_values) + c1 * c1 + c2 * c2;

    let w_tilde: Vec<f64> = state.w.iter().zip(&g.w).map(|(w, gw)| (w - eta_t * gw).clamp(0.0, 1.0)).collect();
    let w_new = prox(&w_tilde, eta_t)?;
    let delta_w_sq: f64 = w_new.iter().zip(&state.w).map(|(a, b)| (a - b) * (a - b)).sum();
    state.w = w_new;
    axpy(state.theta1.theta_mut(), -eta_t, &g.theta1);
    axpy(state.theta2.theta_mut(), -eta_t, &g.theta2);

    let mut dual_sq = 0.0;
    let mut ascend = |x: &mut f64, value: f64| {
        let next = (*x + eta_t * value).max(0.0);
        dual_sq += ((next - *x) / eta_t).powi(2);
        *x = next;
    };
    for (plane, v) in state.polytope.planes.iter_mut().zip(plane_values) {
        ascend(&mut plane.lambda, v);
    }
    ascend(&mut state.mu1, c1);
    ascend(&mut state.mu2, c2);

    state.t = t;
    state.history.push(HistoryRecord {
        iter: t,
        eta_t,
        loss_s: g.loss_s,
        loss_l: 0.0,
        j: 0.0,
        g: regularizer_g(&state.w)?,
        delta_w_sq,
        num_planes: state.polytope.len(),
        mu1: state.mu1,
        mu2: state.mu2,
        lambda_sum: state.polytope.lambda_sum(),
    });
    state.stationarity.push(StationarityRecord {
        iter: t,
        grad_u_sq: sq_norm(&g.theta1) + sq_norm(&g.theta2),
        grad_v_sq,
        grad_v_proj_sq: dual_sq,
    });
    Ok(StepInfo { eta_t, loss_s: g.loss_s, delta_w_sq })
}

pub fn run_spg_mibo(data: &TaskData, train_rows: &[usize], config: &SolverConfig) -> Result<SolverState, SolverError> {
    run_spg_mibo_with(data, train_rows, config, None, |_| false)
}

/// Full training loop. `stop` is consulted before every iteration and ends
/// the run early when it returns `true`.
pub fn run_spg_mibo_with<F>(
    data: &TaskData,
    train_rows: &[usize],
    config: &SolverConfig,
    mut logs: Option<&mut RunLogs>,
    mut stop: F,
) -> Result<SolverState, SolverError>
where
    F: FnMut(&SolverState) -> bool,
{
    let mut state = init_state(data, train_rows, config)?;
    let theta1_init = state.theta1.clone();
    let rule = PlaneRule { epsilon: state.epsilon, multiplier_tol: config.multiplier_tol, drop_after: config.drop_after };
    let mut sampler = BatchSampler::new(train_rows, config.batch_size, rng_stream(config.seed, STREAM_BATCHES));
    let mut eval_sampler = BatchSampler::new(train_rows, config.batch_size, rng_stream(config.seed, STREAM_EVAL));

    for t in 1..=config.iterations {
        if stop(&state) {
            break;
        }
        let eta_t = step_size(config.eta, t);
        let lower: Vec<Batch> =
            (0..config.k_steps).map(|_| data.batch(&sampler.next_rows())).collect::<Result<_, _>>()?;
        let eval = data.batch(&eval_sampler.next_rows())?;
        let start = if config.cold_start { &theta1_init } else { &state.theta1 };
        let est = estimate_lower_optimum(start, &state.w, &lower, &eval, eta_t).map_err(blame("theta1", t))?;
        if config.lower_tracking {
            state.theta1.set_theta(est.theta)?;
        }
        let upper = data.batch(&sampler.next_rows())?;
        spg_step(&mut state, &upper, config.eta, t)?;

        let je = j_value_grad(&state.theta1, &state.w, &eval, est.loss).map_err(blame("theta1", t))?;
        check_finite(&je.grad_theta1, "theta1", t)?;
        update_polytope(&mut state.polytope, je.j, &je.grad_w, &je.grad_theta1, &state.w, state.theta1.theta(), rule)?;

        let rec = state.history.last_mut().expect("row appended by spg_step");
        rec.loss_l = je.loss_l;
        rec.j = je.j;
        rec.num_planes = state.polytope.len();
        rec.lambda_sum = state.polytope.lambda_sum();

        if config.gap_snapshot == GapSnapshot::BestEval {
            let score = je.loss_l + state.theta2.loss(SelectionParam::Relaxed(&state.w), &eval)?;
            if state.best_eval.as_ref().is_none_or(|(best, _)| score < *best) {
                state.best_eval = Some((score, state.w.clone()));
            }
        }
        if let Some(logs) = logs.as_deref_mut() {
            logs.push(state.history.last().unwrap(), state.stationarity.last().unwrap())?;
        }
    }
    Ok(state)
}

/// Plane value at the iterate, exposed for diagnostics.
pub fn plane_values(state: &SolverState) -> Vec<f64> {
    state
        .polytope
        .planes
        .iter()
        .map(|p| p.value(&state.w, state.theta1.theta()))
        .collect()
}

use approx::assert_relative_eq;
use rand::Rng;

use super::*;
use crate::metrics::integer_feasibility_gap;
use crate::models::{Batch, HeadKind, SelectionParam, SensingMode, TaskData, TaskModel};

const SUBS: usize = 6;
const WIDTH: usize = 2 * SUBS;

/// Random features whose position depends on a few subcarriers.
fn synthetic(n: usize, seed: u64) -> TaskData {
    let mut rng = rng_stream(seed, 77);
    let x: Vec<f64> = (0..n * WIDTH).map(|_| rng.random_range(-1.0..1.0)).collect();
    let positions: Vec<f64> = (0..n).flat_map(|r| [x[r * WIDTH] + 0.5 * x[r * WIDTH + 1], x[r * WIDTH + 4]]).collect();
    let states: Vec<usize> = (0..n).map(|r| usize::from(x[r * WIDTH + 2] > 0.0)).collect();
    TaskData { x, width: WIDTH, n_subs: SUBS, positions, states, n_states: 2, sensing_mode: SensingMode::Regression }
}

/// All-zero features and positions, one sensing state: zero parameters are
/// stationary for the localization loss.
fn degenerate(n: usize) -> TaskData {
    TaskData {
        x: vec![0.0; n * WIDTH],
        width: WIDTH,
        n_subs: SUBS,
        positions: vec![0.0; 2 * n],
        states: vec![0; n],
        n_states: 2,
        sensing_mode: SensingMode::Regression,
    }
}

fn small_config() -> SolverConfig {
    SolverConfig { hidden: vec![8], iterations: 40, batch_size: 8, ..SolverConfig::default() }
}

fn rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn state_for(data: &TaskData, config: &SolverConfig) -> SolverState {
    init_state(data, &rows(data.len()), config).unwrap()
}

#[test]
fn estimate_keeps_stationary_point() {
    let data = degenerate(16);
    let model = TaskModel::from_parts(vec![WIDTH, 4, 2], HeadKind::Position, SUBS, vec![0.0; WIDTH * 4 + 4 + 4 * 2 + 2])
        .unwrap();
    let w = vec![0.3; SUBS];
    let batches: Vec<Batch> = (0..5).map(|i| data.batch(&[i, i + 1, i + 2]).unwrap()).collect();
    let eval = data.batch(&rows(16)).unwrap();
    let est = estimate_lower_optimum(&model, &w, &batches, &eval, 0.1).unwrap();
    assert_eq!(est.theta, model.theta());
    assert_eq!(est.w, w);
    assert_eq!(est.loss, model.loss(SelectionParam::Relaxed(&w), &eval).unwrap());
}

#[test]
fn estimate_descends_with_small_steps() {
    let data = synthetic(64, 3);
    let eval = data.batch(&rows(64)).unwrap();
    for trial in 0..20 {
        let config = SolverConfig { seed: trial, ..small_config() };
        let state = state_for(&data, &config);
        let start = state.theta1.loss(SelectionParam::Relaxed(&state.w), &eval).unwrap();
        let batches = vec![eval.clone(); 5];
        let est = estimate_lower_optimum(&state.theta1, &state.w, &batches, &eval, config.eta / 10.0).unwrap();
        assert!(est.loss <= start, "trial {trial}: {} > {start}", est.loss);
    }
}

#[test]
fn one_step_estimate_matches_hand_step() {
    let data = synthetic(32, 4);
    let config = small_config();
    let state = state_for(&data, &config);
    let batch = data.batch(&rows(8)).unwrap();
    let eval = data.batch(&rows(32)).unwrap();
    let step = 0.07;
    let est = estimate_lower_optimum(&state.theta1, &state.w, std::slice::from_ref(&batch), &eval, step).unwrap();

    let g = state.theta1.loss_grad(SelectionParam::Relaxed(&state.w), &batch).unwrap();
    let theta: Vec<f64> = state.theta1.theta().iter().zip(&g.theta).map(|(p, d)| p - step * d).collect();
    let w: Vec<f64> = state.w.iter().zip(&g.selection).map(|(p, d)| (p - step * d).clamp(0.0, 1.0)).collect();
    assert_eq!(est.theta, theta);
    assert_eq!(est.w, w);
    let mut model = state.theta1.clone();
    model.set_theta(theta).unwrap();
    assert_eq!(est.loss, model.loss(SelectionParam::Relaxed(&w), &eval).unwrap());
    // the live model is untouched
    assert_eq!(state.theta1.theta(), state_for(&data, &config).theta1.theta());
}

#[test]
fn estimate_rejects_zero_steps() {
    let data = synthetic(8, 1);
    let state = state_for(&data, &small_config());
    let eval = data.batch(&rows(8)).unwrap();
    assert!(estimate_lower_optimum(&state.theta1, &state.w, &[], &eval, 0.1).is_err());
}

#[test]
fn j_examples() {
    let data = synthetic(16, 5);
    let state = state_for(&data, &small_config());
    let batch = data.batch(&rows(16)).unwrap();
    let l = state.theta1.loss(SelectionParam::Relaxed(&state.w), &batch).unwrap();
    assert_eq!(j_value(&state.theta1, &state.w, &batch, l).unwrap(), 0.0);
    assert_relative_eq!(j_value(&state.theta1, &state.w, &batch, l - 1.0).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(j_value(&state.theta1, &state.w, &batch, l + 3.0).unwrap(), 9.0, epsilon = 1e-12);
    let je = j_value_grad(&state.theta1, &state.w, &batch, l - 1.0).unwrap();
    assert_relative_eq!(je.j, 1.0, epsilon = 1e-12);
    assert_eq!(je.loss_l, l);
    // dJ = 2 (L - L̂) dL
    let g = state.theta1.loss_grad(SelectionParam::Relaxed(&state.w), &batch).unwrap();
    for (a, b) in je.grad_theta1.iter().zip(&g.theta) {
        assert_relative_eq!(*a, 2.0 * b, epsilon = 1e-12);
    }
}

#[test]
fn lagrangian_examples() {
    let data = synthetic(16, 6);
    let mut state = state_for(&data, &small_config());
    let batch = data.batch(&rows(16)).unwrap();
    state.w = vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let ls = state.theta2.loss(SelectionParam::Relaxed(&state.w), &batch).unwrap();
    assert_eq!(lagrangian(&state, &batch).unwrap(), ls);

    state.w = vec![0.5; SUBS];
    let base = lagrangian(&state, &batch).unwrap();
    let p1 = state.theta1.n_params();
    state.polytope.planes.push(CuttingPlane {
        id: 0,
        a: vec![0.0; SUBS],
        b: vec![0.0; p1],
        c: 5.0,
        lambda: 1.0,
        inactive_count: 0,
    });
    assert_relative_eq!(lagrangian(&state, &batch).unwrap(), base + 5.0, epsilon = 1e-12);

    // a violated plane: larger λ gives a strictly larger value
    let mut prev = lagrangian(&state, &batch).unwrap();
    for lambda in [1.5, 2.0, 4.0] {
        state.polytope.planes[0].lambda = lambda;
        let next = lagrangian(&state, &batch).unwrap();
        assert!(next > prev);
        prev = next;
    }

    // cardinality terms: ‖w̄‖₁ = 3, N_min = 2, N_max = 3
    state.polytope.planes.clear();
    state.mu1 = 2.0;
    state.mu2 = 0.5;
    assert_relative_eq!(lagrangian(&state, &batch).unwrap(), base + 2.0 * (2.0 - 3.0), epsilon = 1e-12);
}

#[test]
fn lagrangian_gradient_matches_finite_differences() {
    let data = synthetic(12, 7);
    let mut state = state_for(&data, &small_config());
    let batch = data.batch(&rows(12)).unwrap();
    state.w = vec![0.2, 0.7, 0.45, 0.9, 0.1, 0.6];
    state.mu1 = 0.3;
    state.mu2 = 0.8;
    let p1 = state.theta1.n_params();
    let mut rng = rng_stream(9, 0);
    state.polytope.planes.push(CuttingPlane {
        id: 0,
        a: (0..SUBS).map(|_| rng.random_range(-1.0..1.0)).collect(),
        b: (0..p1).map(|_| rng.random_range(-1.0..1.0)).collect(),
        c: 0.1,
        lambda: 0.7,
        inactive_count: 0,
    });
    let g = lagrangian_gradient(&state, &batch, true).unwrap();
    let h = 1e-6;
    for i in 0..SUBS {
        let mut s = state.clone();
        s.w[i] += h;
        let up = lagrangian(&s, &batch).unwrap();
        s.w[i] -= 2.0 * h;
        let down = lagrangian(&s, &batch).unwrap();
        assert_relative_eq!(g.w[i], (up - down) / (2.0 * h), epsilon = 1e-5, max_relative = 1e-5);
    }
    for i in (0..p1).step_by(7) {
        let mut s = state.clone();
        s.theta1.theta_mut()[i] += h;
        let up = lagrangian(&s, &batch).unwrap();
        s.theta1.theta_mut()[i] -= 2.0 * h;
        let down = lagrangian(&s, &batch).unwrap();
        assert_relative_eq!(g.theta1[i], (up - down) / (2.0 * h), epsilon = 1e-5, max_relative = 1e-5);
    }
    let g_no_reg = lagrangian_gradient(&state, &batch, false).unwrap();
    for ((a, b), r) in g.w.iter().zip(&g_no_reg.w).zip(regularizer_g_grad(&state.w)) {
        assert_relative_eq!(a - b, r, epsilon = 1e-12);
    }
}

/// State at a corner where every gradient vanishes and no constraint binds.
fn resting_state() -> (SolverState, Batch) {
    let data = degenerate(8);
    let config = SolverConfig { hidden: vec![4], ..SolverConfig::default() };
    let mut state = state_for(&data, &config);
    state.theta1.set_theta(vec![0.0; state.theta1.n_params()]).unwrap();
    // sensing output bias reproduces the one-hot target [1, 0]
    let mut t2 = vec![0.0; state.theta2.n_params()];
    let n = t2.len();
    t2[n - 2] = 1.0;
    state.theta2.set_theta(t2).unwrap();
    state.w = vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    (state, data.batch(&rows(8)).unwrap())
}

#[test]
fn resting_state_is_fixed_by_a_step() {
    let (mut state, batch) = resting_state();
    let before = state.clone();
    let info = spg_step(&mut state, &batch, 1.0, 1).unwrap();
    assert_eq!(info.delta_w_sq, 0.0);
    assert_eq!(state.w, before.w);
    assert_eq!(state.theta1.theta(), before.theta1.theta());
    assert_eq!(state.theta2.theta(), before.theta2.theta());
    assert_eq!((state.mu1, state.mu2), (0.0, 0.0));
    assert_eq!(state.stationarity[0].grad_u_sq, 0.0);
    assert_eq!(state.stationarity[0].grad_v_proj_sq, 0.0);
    // constraint values N_min - 3 = -1 and 3 - N_max = 0
    assert_eq!(state.stationarity[0].grad_v_sq, 1.0);
}

#[test]
fn step_sizes_follow_inverse_sqrt() {
    let (mut state, batch) = resting_state();
    let etas: Vec<f64> = [1, 4, 16].iter().map(|&t| spg_step(&mut state, &batch, 1.0, t).unwrap().eta_t).collect();
    assert_eq!(etas, vec![1.0, 0.5, 0.25]);
    assert_eq!(state.history.iter().map(|h| h.eta_t).collect::<Vec<_>>(), etas);
    assert!(spg_step(&mut state, &batch, 1.0, 0).is_err());
}

#[test]
fn duals_stay_non_negative() {
    let data = synthetic(32, 8);
    let mut rng = rng_stream(10, 0);
    for trial in 0..20u64 {
        let config = SolverConfig { seed: trial, ..small_config() };
        let mut state = state_for(&data, &config);
        state.w = (0..SUBS).map(|_| rng.random_range(0.0..1.0)).collect();
        state.mu1 = rng.random_range(0.0..0.05);
        state.mu2 = rng.random_range(0.0..0.05);
        let p1 = state.theta1.n_params();
        state.polytope.planes.push(CuttingPlane {
            id: 0,
            a: (0..SUBS).map(|_| rng.random_range(-1.0..1.0)).collect(),
            b: vec![0.0; p1],
            c: -10.0,
            lambda: 0.01,
            inactive_count: 0,
        });
        let batch = data.batch(&rows(32)).unwrap();
        for t in 1..=5 {
            spg_step(&mut state, &batch, 0.5, t).unwrap();
            assert!(state.mu1 >= 0.0 && state.mu2 >= 0.0);
            assert!(state.polytope.planes.iter().all(|p| p.lambda >= 0.0));
            assert!(state.w.iter().all(|w| (0.0..=1.0).contains(w)));
        }
        // the plane value is below -8, so its multiplier is projected to 0
        assert_eq!(state.polytope.planes[0].lambda, 0.0);
    }
}

#[test]
fn runs_are_bit_identical_per_seed() {
    let data = synthetic(48, 11);
    let config = small_config();
    let a = run_spg_mibo(&data, &rows(48), &config).unwrap();
    let b = run_spg_mibo(&data, &rows(48), &config).unwrap();
    assert_eq!(a.history.len(), config.iterations);
    // 17 significant digits render every f64 exactly
    let rows_of = |s: &SolverState| s.history.iter().map(|h| h.csv_row()).collect::<Vec<_>>();
    assert_eq!(rows_of(&a), rows_of(&b));
    assert_eq!(a.w, b.w);
    assert_eq!(a.theta1.theta(), b.theta1.theta());
    let c = run_spg_mibo(&data, &rows(48), &SolverConfig { seed: 2, ..config }).unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn history_columns_are_consistent() {
    let data = synthetic(48, 12);
    let config = small_config();
    let state = run_spg_mibo(&data, &rows(48), &config).unwrap();
    for (i, h) in state.history.iter().enumerate() {
        assert_eq!(h.iter, i + 1);
        assert_eq!(h.eta_t, step_size(config.eta, i + 1));
        assert!(h.j >= 0.0 && h.g >= 0.0 && h.mu1 >= 0.0 && h.mu2 >= 0.0 && h.lambda_sum >= 0.0);
        assert!(h.loss_l > 0.0 && h.loss_s > 0.0);
    }
    assert_eq!(state.stationarity.len(), config.iterations);
    assert_eq!(state.history.last().unwrap().num_planes, state.polytope.len());
}

#[test]
fn immediate_stop_returns_initial_state() {
    let data = synthetic(24, 13);
    let config = small_config();
    let init = state_for(&data, &config);
    let state = run_spg_mibo_with(&data, &rows(24), &config, None, |_| true).unwrap();
    assert!(state.history.is_empty());
    assert_eq!(state.t, 0);
    assert_eq!(state.w, init.w);
    assert_eq!(state.theta1.theta(), init.theta1.theta());
    assert_eq!(state.theta2.theta(), init.theta2.theta());
}

#[test]
fn explicit_epsilon_is_used() {
    let data = synthetic(24, 14);
    let config = SolverConfig { epsilon: Some(0.25), ..small_config() };
    assert_eq!(state_for(&data, &config).epsilon, 0.25);
    let scaled = state_for(&data, &small_config());
    let l = scaled.theta1.loss(SelectionParam::Relaxed(&scaled.w), &data.batch(&rows(24)).unwrap()).unwrap();
    assert_relative_eq!(scaled.epsilon, 1e-2 * l);
}

#[test]
fn non_finite_features_abort_with_block_name() {
    let mut data = synthetic(16, 15);
    data.x[3] = 1e300;
    data.x[4] = 1e300;
    let config = SolverConfig { epsilon: Some(0.1), ..small_config() };
    match run_spg_mibo(&data, &rows(16), &config) {
        Err(SolverError::NonFinite { block, iter }) => {
            assert!(["theta1", "theta2", "w", "lambda"].contains(&block));
            assert_eq!(iter, 1);
        }
        other => panic!("expected a non-finite abort, got {:?}", other.map(|s| s.t)),
    }
    let err = run_penalty_baseline(&data, &rows(16), &config, None).unwrap_err();
    assert!(matches!(err, SolverError::NonFinite { .. }), "{err}");
}

#[test]
fn penalty_examples() {
    assert_eq!(penalty(&[0.0, 1.0, 1.0, 0.0], 1.0), 0.0);
    assert_eq!(penalty(&[0.5; 4], 1.0), 1.0);
    assert_eq!(penalty_grad(&[0.5; 3], 2.0), vec![0.0; 3]);
}

#[test]
fn baselines_are_deterministic_with_full_history() {
    let data = synthetic(40, 16);
    let config = small_config();
    let a = run_penalty_baseline(&data, &rows(40), &config, None).unwrap();
    let b = run_penalty_baseline(&data, &rows(40), &config, None).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.history.len(), config.iterations);
    assert_eq!(a.gap_selection, b.gap_selection);
    assert!(a.localization.is_some() && a.sensing.is_some());
    let s = run_single_task(&data, &rows(40), Task::Sensing, &config, None).unwrap();
    assert!(s.localization.is_none() && s.sensing.is_some());
    assert_eq!(s.history.len(), config.iterations);
    assert_eq!(s.history, run_single_task(&data, &rows(40), Task::Sensing, &config, None).unwrap().history);
    assert!(train(&data, &rows(40), &config, Method::SingleTask, None, None).is_err());
}

#[test]
fn single_task_on_constant_labels_reaches_zero_loss() {
    let mut data = synthetic(40, 17);
    data.states = vec![1; 40];
    let config = SolverConfig { iterations: 1500, eta: 0.2, ..small_config() };
    let run = run_single_task(&data, &rows(40), Task::Sensing, &config, None).unwrap();
    let first = run.history[0].loss_s;
    let tail: f64 = run.history[run.history.len() - 50..].iter().map(|h| h.loss_s).sum::<f64>() / 50.0;
    assert!(tail < 1e-3 && tail < first / 100.0, "first {first}, tail {tail}");
}

#[test]
fn spg_drives_selection_toward_integers() {
    let data = synthetic(64, 18);
    let config = SolverConfig { iterations: 300, ..small_config() };
    let state = run_spg_mibo(&data, &rows(64), &config).unwrap();
    assert!(integer_feasibility_gap(&state.w) < integer_feasibility_gap(&[0.5; SUBS]));
}

#[test]
fn run_logs_match_history() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(32, 19);
    let config = SolverConfig { flush_every: 7, ..small_config() };
    let mut logs = RunLogs::create(dir.path(), config.flush_every).unwrap();
    let run = train(&data, &rows(32), &config, Method::SpgMibo, None, Some(&mut logs)).unwrap();
    logs.finish().unwrap();
    assert_eq!(read_history(&dir.path().join("history.csv")).unwrap(), run.history);
    assert_eq!(read_stationarity(&dir.path().join("stationarity.csv")).unwrap(), run.stationarity);
}

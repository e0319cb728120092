//! Stochastic proximal gradient solver for the bilevel selection problem,
//! together with the gradient-descent baselines it is compared against.
//!
//! Sensing is the upper level and localization the lower level. Each
//! iteration estimates the lower-level optimum with a few gradient steps,
//! takes a proximal primal step and a projected dual step on the Lagrangian,
//! and refreshes the cutting-plane approximation of the lower-level
//! optimality constraint.

mod baseline;
mod config;
mod history;
mod polytope;
mod prox;
mod sampler;
mod spg;

#[cfg(test)]
mod tests;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{run_penalty_baseline, run_single_task};
pub use config::{GapSnapshot, SolverConfig};
pub use history::{
    read_history, read_stationarity, write_history, write_stationarity, CsvLog, HistoryRecord, StationarityRecord,
    HISTORY_HEADER, STATIONARITY_HEADER,
};
pub use polytope::{update_polytope, CuttingPlane, PlaneRule, Polytope, PolytopeChange};
pub use prox::{penalty, penalty_grad, prox, prox_coord, regularizer_g, regularizer_g_grad, step_size};
pub use sampler::{rng_stream, BatchSampler};
pub use spg::{
    estimate_lower_optimum, init_state, j_value, j_value_grad, lagrangian, lagrangian_gradient, plane_values,
    run_spg_mibo, run_spg_mibo_with, spg_step, JEval, LagrangianGrad, LowerEstimate, SolverState, StepInfo,
};

use crate::autodiff::AutodiffError;
use crate::models::{ModelError, TaskData, TaskModel};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite gradient in block `{block}` at iteration {iter}")]
    NonFinite { block: &'static str, iter: usize },
    #[error("history format: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Turns a non-finite forward value into a [`SolverError::NonFinite`] that
/// names the variable block being differentiated.
pub(crate) fn blame(block: &'static str, iter: usize) -> impl Fn(SolverError) -> SolverError {
    move |e| match e {
        SolverError::Model(ModelError::Autodiff(AutodiffError::NonFinite(_))) => SolverError::NonFinite { block, iter },
        other => other,
    }
}

/// Training method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SpgMibo,
    Penalty,
    SingleTask,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SpgMibo => "spg-mibo",
            Method::Penalty => "penalty",
            Method::SingleTask => "single-task",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "loc")]
    Localization,
    #[serde(rename = "sen")]
    Sensing,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Localization => "loc",
            Task::Sensing => "sen",
        }
    }
}

/// Trained networks (each with the relaxed selection it uses) and the logs
/// of one run.
#[derive(Clone, Debug)]
pub struct TrainedRun {
    pub localization: Option<(TaskModel, Vec<f64>)>,
    pub sensing: Option<(TaskModel, Vec<f64>)>,
    /// Selection the integer feasibility gap is measured on.
    pub gap_selection: Vec<f64>,
    pub history: Vec<HistoryRecord>,
    pub stationarity: Vec<StationarityRecord>,
}

impl TrainedRun {
    pub fn from_state(state: SolverState, snapshot: GapSnapshot) -> Self {
        let gap_selection = state.gap_selection(snapshot).to_vec();
        Self {
            localization: Some((state.theta1, state.w.clone())),
            sensing: Some((state.theta2, state.w)),
            gap_selection,
            history: state.history,
            stationarity: state.stationarity,
        }
    }
}

/// `history.csv` and `stationarity.csv` written incrementally during a run.
pub struct RunLogs {
    history: CsvLog,
    stationarity: CsvLog,
}

impl RunLogs {
    pub fn create(dir: &Path, flush_every: usize) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            history: CsvLog::create(&dir.join("history.csv"), HISTORY_HEADER, flush_every)?,
            stationarity: CsvLog::create(&dir.join("stationarity.csv"), STATIONARITY_HEADER, flush_every)?,
        })
    }

    pub fn push(&mut self, h: &HistoryRecord, s: &StationarityRecord) -> std::io::Result<()> {
        self.history.push(&h.csv_row())?;
        self.stationarity.push(&s.csv_row())
    }

    pub fn finish(self) -> std::io::Result<()> {
        self.history.finish()?;
        self.stationarity.finish()
    }
}

/// Runs `method` on `train_rows`; `task` is required for single-task runs.
pub fn train(
    data: &TaskData,
    train_rows: &[usize],
    config: &SolverConfig,
    method: Method,
    task: Option<Task>,
    logs: Option<&mut RunLogs>,
) -> Result<TrainedRun, SolverError> {
    match method {
        Method::SpgMibo => {
            let state = run_spg_mibo_with(data, train_rows, config, logs, |_| false)?;
            Ok(TrainedRun::from_state(state, config.gap_snapshot))
        }
        Method::Penalty => run_penalty_baseline(data, train_rows, config, logs),
        Method::SingleTask => {
            let task = task.ok_or_else(|| SolverError::InvalidConfig("single-task training needs a task".into()))?;
            run_single_task(data, train_rows, task, config, logs)
        }
    }
}

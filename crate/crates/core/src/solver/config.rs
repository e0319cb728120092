use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::models::SensingMode;

/// Which relaxed selection the feasibility gap is reported on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapSnapshot {
    /// The iterate after the last iteration.
    #[default]
    Final,
    /// The iterate with the lowest evaluation-batch loss `L_s + L_l`.
    BestEval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Base step `η`; iteration `t` uses `η/√t`.
    pub eta: f64,
    /// Lower-level gradient steps per iteration.
    pub k_steps: usize,
    /// Relaxation bound; when unset, `epsilon_scale × L_l` at initialization.
    pub epsilon: Option<f64>,
    pub epsilon_scale: f64,
    /// Cardinality bounds on `‖w̄‖₁`; unset means `⌊N/3⌋` and `⌊N/2⌋`.
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub multiplier_tol: f64,
    pub drop_after: u32,
    /// Weight of the integrality penalty in the gradient-descent baselines.
    pub lambda_p: f64,
    pub hidden: Vec<usize>,
    pub sensing_mode: SensingMode,
    /// Let the live `θ1` adopt the K-step lower-level estimate each iteration.
    pub lower_tracking: bool,
    /// Start each lower-level estimate from the initial `θ1` instead of the live one.
    pub cold_start: bool,
    pub gap_snapshot: GapSnapshot,
    /// History rows buffered between disk flushes.
    pub flush_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            k_steps: 5,
            epsilon: None,
            epsilon_scale: 1e-2,
            n_min: None,
            n_max: None,
            iterations: 2000,
            batch_size: 32,
            seed: 1,
            multiplier_tol: 1e-8,
            drop_after: 2,
            lambda_p: 1.0,
            hidden: vec![64, 64],
            sensing_mode: SensingMode::Regression,
            lower_tracking: true,
            cold_start: false,
            gap_snapshot: GapSnapshot::Final,
            flush_every: 50,
        }
    }
}

impl SolverConfig {
    /// Checks every field and resolves the cardinality bounds for `n_subs`.
    pub fn validate(&self, n_subs: usize) -> Result<(usize, usize), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.k_steps == 0 {
            return bad("k_steps must be at least 1".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale.is_finite()) {
            return bad(format!("epsilon_scale must be positive, got {}", self.epsilon_scale));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.multiplier_tol >= 0.0) {
            return bad(format!("multiplier_tol must be non-negative, got {}", self.multiplier_tol));
        }
        if self.drop_after == 0 {
            return bad("drop_after must be at least 1".into());
        }
        if !(self.lambda_p > 0.0 && self.lambda_p.is_finite()) {
            return bad(format!("lambda_p must be positive, got {}", self.lambda_p));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if self.flush_every == 0 {
            return bad("flush_every must be at least 1".into());
        }
        let n_min = self.n_min.unwrap_or(n_subs / 3);
        let n_max = self.n_max.unwrap_or(n_subs / 2);
        if n_min > n_max {
            return bad(format!("n_min ({n_min}) exceeds n_max ({n_max})"));
        }
        if n_max > n_subs {
            return bad(format!("n_max ({n_max}) exceeds the {n_subs} subcarriers"));
        }
        Ok((n_min, n_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_cardinality_bounds() {
        assert_eq!(SolverConfig::default().validate(64).unwrap(), (21, 32));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let c = SolverConfig { n_min: Some(20), n_max: Some(10), ..Default::default() };
        assert!(matches!(c.validate(64), Err(SolverError::InvalidConfig(_))));
        let c = SolverConfig { eta: 0.0, ..Default::default() };
        assert!(c.validate(64).is_err());
        let c = SolverConfig { k_steps: 0, ..Default::default() };
        assert!(c.validate(64).is_err());
    }
}

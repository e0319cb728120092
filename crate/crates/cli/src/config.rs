//! Experiment configuration: one TOML file with `[scenario]`, `[solver]` and
//! `[run]` sections. Every key is optional and unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::Path;

use mibo_core::csi::SimScenario;
use mibo_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Seeds, dataset seed and cross-validation folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// One training run per seed; runs with equal seeds across methods are paired.
    pub seeds: Vec<u64>,
    /// Seed of the simulated channel used by `simulate`.
    pub dataset_seed: u64,
    /// K-fold evaluation per seed; `0` skips cross-validation.
    pub folds: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seeds: vec![1, 2, 3, 4, 5], dataset_seed: 1, folds: 5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: SimScenario,
    pub solver: SolverConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Missing { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// Loads `path` if given, otherwise the defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.solver.validate(self.scenario.n_subs()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.run.seeds.is_empty() {
            return Err(ConfigError::Invalid("run.seeds is empty".into()));
        }
        let distinct: BTreeSet<u64> = self.run.seeds.iter().copied().collect();
        if distinct.len() != self.run.seeds.len() {
            return Err(ConfigError::Invalid("run.seeds contains duplicates".into()));
        }
        if self.run.folds == 1 {
            return Err(ConfigError::Invalid("run.folds must be 0 or at least 2".into()));
        }
        Ok(())
    }

    /// The defaults as a commented TOML document.
    pub fn defaults_toml() -> String {
        let body = toml::to_string(&Self::default()).expect("defaults serialize");
        format!(
            "# Default configuration. Every key may be omitted.\n\
             # Unset by default: solver.epsilon (epsilon_scale times the initial\n\
             # localization loss), solver.n_min and solver.n_max (a third and a\n\
             # half of the subcarrier count).\n\n{body}"
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn printed_defaults_parse_back() {
        assert_eq!(RunConfig::from_toml(&RunConfig::defaults_toml()).unwrap(), RunConfig::default());
    }

    #[test]
    fn cardinality_violation_rejected() {
        let err = RunConfig::from_toml("[solver]\nn_min = 20\nn_max = 10\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
    }

    #[test]
    fn unknown_keys_named() {
        for text in ["foo = 1\n", "[solver]\nfoo = 1\n", "[run]\nfoo = 1\n", "[scenario]\nfoo = 1\n"] {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert!(matches!(err, ConfigError::Syntax(_)));
            assert!(err.to_string().contains("foo"), "{err}");
        }
    }

    #[test]
    fn malformed_and_missing() {
        assert!(matches!(RunConfig::from_toml("[solver\n").unwrap_err(), ConfigError::Syntax(_)));
        let err = RunConfig::load(Path::new("/nonexistent/mibo.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Missing { .. }));
    }

    #[test]
    fn run_section_checks() {
        assert!(RunConfig::from_toml("[run]\nseeds = []\n").is_err());
        assert!(RunConfig::from_toml("[run]\nseeds = [1, 1]\n").is_err());
        assert!(RunConfig::from_toml("[run]\nfolds = 1\n").is_err());
        let c = RunConfig::from_toml("[run]\nseeds = [7]\nfolds = 0\n[solver]\niterations = 10\n").unwrap();
        assert_eq!(c.run.seeds, vec![7]);
        assert_eq!(c.solver.iterations, 10);
    }
}

use serde::{Deserialize, Serialize};

use super::channel::{Channel, CsiMatrix};
use super::geometry::distance;
use super::{CsiError, SimScenario};

/// How complex CSI is turned into real model inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Featurization {
    /// `(re, im)` per subcarrier, interleaved: width `2 · N_subs`.
    #[default]
    Stacked,
    /// `|H|` per subcarrier: width `N_subs`.
    Magnitude,
}

impl Featurization {
    /// Feature values contributed by each subcarrier.
    pub fn per_subcarrier(self) -> usize {
        match self {
            Featurization::Stacked => 2,
            Featurization::Magnitude => 1,
        }
    }
}

/// One time slot: channel response, target state and target position.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiSample {
    pub h: CsiMatrix,
    pub state: usize,
    pub position: [f64; 2],
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub scenario: SimScenario,
    pub seed: u64,
    pub featurization: Featurization,
    pub samples: Vec<CsiSample>,
}

/// One sample per (grid point, state), states innermost. Grid points that
/// coincide with a device are skipped.
pub fn generate_dataset(scenario: &SimScenario, seed: u64) -> Result<Dataset, CsiError> {
    let channel = Channel::new(scenario.clone(), seed)?;
    let devices: Vec<[f64; 2]> = scenario.tx.iter().chain(&scenario.rx).copied().collect();
    let mut samples = Vec::new();
    for p in scenario.grid() {
        if devices.iter().any(|d| distance(*d, p) < 1e-9) {
            continue;
        }
        for state in 0..scenario.states.len() {
            let slot = samples.len();
            let h = channel.synthesize_csi(p, state, slot)?;
            samples.push(CsiSample { h, state, position: p, slot });
        }
    }
    Ok(Dataset { scenario: scenario.clone(), seed, featurization: Featurization::Stacked, samples })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_subs(&self) -> usize {
        self.scenario.n_subs()
    }

    pub fn n_states(&self) -> usize {
        self.scenario.states.len()
    }

    pub fn feature_width(&self) -> usize {
        self.n_subs() * self.featurization.per_subcarrier()
    }

    /// Feature row of one sample; subcarrier `pair · M + m` occupies a
    /// contiguous group of [`Featurization::per_subcarrier`] values.
    pub fn feature_row(&self, index: usize) -> Vec<f64> {
        let h = &self.samples[index].h;
        match self.featurization {
            Featurization::Stacked => h.data.iter().flat_map(|c| [c.re, c.im]).collect(),
            Featurization::Magnitude => h.data.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Row-major feature matrix for the given sample indices.
    pub fn features(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().flat_map(|&i| self.feature_row(i)).collect()
    }
}

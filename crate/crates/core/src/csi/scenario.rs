use serde::{Deserialize, Serialize};

use super::CsiError;

/// Propagation speed used for path delays, in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// A target posture and the factor by which it scales dynamic-path gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetState {
    pub name: String,
    pub gamma: f64,
}

/// Room geometry, radio parameters and target states of a simulated deployment.
///
/// Gains are linear amplitudes at 1 m. Noise variance is linear power on the
/// same scale (a unit-amplitude path carries 0 dBm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimScenario {
    pub room_width: f64,
    pub room_height: f64,
    pub tx: Vec<[f64; 2]>,
    pub rx: Vec<[f64; 2]>,
    pub subcarriers: usize,
    pub carrier_hz: f64,
    pub spacing_hz: f64,
    pub static_gain: f64,
    pub dynamic_gain: f64,
    pub noise_variance: f64,
    pub static_paths: usize,
    pub dynamic_paths: usize,
    pub grid_spacing: f64,
    pub states: Vec<TargetState>,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            room_width: 4.0,
            room_height: 3.0,
            // off the 0.2 m and 0.5 m grids so no sample lands on a device
            tx: vec![[0.0, 1.55]],
            rx: vec![[4.0, 0.75], [4.0, 2.25]],
            subcarriers: 32,
            carrier_hz: 2.4e9,
            spacing_hz: 312.5e3,
            static_gain: 1.0,
            dynamic_gain: 0.5,
            noise_variance: 1e-7,
            static_paths: 3,
            dynamic_paths: 3,
            grid_spacing: 0.2,
            states: vec![
                TargetState { name: "standing".into(), gamma: 1.0 },
                TargetState { name: "sitting".into(), gamma: 0.6 },
                TargetState { name: "lying".into(), gamma: 0.3 },
            ],
        }
    }
}

/// Lowest admissible reference gain, -30 dB in amplitude.
const MIN_GAIN: f64 = 0.031_622_776_601_683_79;

impl SimScenario {
    pub fn n_pairs(&self) -> usize {
        self.tx.len() * self.rx.len()
    }

    /// Total subcarrier count across all TX/RX pairs.
    pub fn n_subs(&self) -> usize {
        self.n_pairs() * self.subcarriers
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        const TOL: f64 = 1e-9;
        p[0] >= -TOL && p[0] <= self.room_width + TOL && p[1] >= -TOL && p[1] <= self.room_height + TOL
    }

    /// Grid coordinates along one axis, inclusive of both walls.
    fn axis(extent: f64, spacing: f64) -> Vec<f64> {
        let steps = (extent / spacing + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * spacing).collect()
    }

    /// Sampling grid in row-major order (y outer, x inner).
    pub fn grid(&self) -> Vec<[f64; 2]> {
        let xs = Self::axis(self.room_width, self.grid_spacing);
        let ys = Self::axis(self.room_height, self.grid_spacing);
        ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect()
    }

    pub fn subcarrier_frequency(&self, m: usize) -> f64 {
        self.carrier_hz + m as f64 * self.spacing_hz
    }

    pub fn validate(&self) -> Result<(), CsiError> {
        let bad = |msg: String| Err(CsiError::InvalidScenario(msg));
        if !(self.room_width > 0.0 && self.room_height > 0.0) {
            return bad(format!("room {}x{} must have positive extent", self.room_width, self.room_height));
        }
        if self.tx.is_empty() || self.rx.is_empty() {
            return bad("at least one transmitter and one receiver are required".into());
        }
        for (role, pts) in [("tx", &self.tx), ("rx", &self.rx)] {
            for p in pts.iter() {
                if !self.contains(*p) {
                    return bad(format!("{role} position {p:?} lies outside the room"));
                }
            }
        }
        if !(32..=512).contains(&self.subcarriers) {
            return bad(format!("subcarrier count {} outside [32, 512]", self.subcarriers));
        }
        if !(self.grid_spacing > 0.0) {
            return bad(format!("grid spacing {} must be positive", self.grid_spacing));
        }
        for (name, g) in [("static_gain", self.static_gain), ("dynamic_gain", self.dynamic_gain)] {
            if !(MIN_GAIN * (1.0 - 1e-12)..=1.0).contains(&g) {
                return bad(format!("{name} {g} outside the [-30, 0] dB range"));
            }
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return bad(format!("noise variance {} must be non-negative", self.noise_variance));
        }
        if !(self.carrier_hz > 0.0 && self.spacing_hz > 0.0) {
            return bad("carrier frequency and subcarrier spacing must be positive".into());
        }
        if self.states.is_empty() {
            return bad("at least one target state is required".into());
        }
        if let Some(s) = self.states.iter().find(|s| !(s.gamma >= 0.0 && s.gamma.is_finite())) {
            return bad(format!("state {} has invalid gamma {}", s.name, s.gamma));
        }
        Ok(())
    }
}

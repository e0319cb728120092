use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::geometry::{path_geometry, PathKind};
use super::{CsiError, SimScenario, SPEED_OF_LIGHT};

/// Free-space amplitude of a static path: `a0 / d²`.
pub fn static_gain(a0: f64, d: f64) -> Result<f64, CsiError> {
    if !(d > 0.0) {
        return Err(CsiError::Geometry(format!("path length {d} must be positive")));
    }
    Ok(a0 / (d * d))
}

/// Amplitude of a target-scattered path: `b0 * gamma / d²`.
pub fn dynamic_gain(b0: f64, gamma: f64, d: f64) -> Result<f64, CsiError> {
    if !(d > 0.0) {
        return Err(CsiError::Geometry(format!("path length {d} must be positive")));
    }
    Ok(b0 * gamma / (d * d))
}

pub fn delay(d: f64) -> f64 {
    d / SPEED_OF_LIGHT
}

/// Gain, delay and phase offset of one path's contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathTerm {
    pub gain: f64,
    pub delay: f64,
    pub phase: f64,
}

/// `Σ gain · exp(j(2π f τ + θ))` evaluated at each frequency.
pub fn superpose(terms: &[PathTerm], freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&f| {
            terms
                .iter()
                .map(|t| Complex64::from_polar(t.gain, TAU * f * t.delay + t.phase))
                .sum()
        })
        .collect()
}

/// Complex channel response, `pairs × subcarriers`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiMatrix {
    pub pairs: usize,
    pub subcarriers: usize,
    pub data: Vec<Complex64>,
}

impl CsiMatrix {
    pub fn zeros(pairs: usize, subcarriers: usize) -> Self {
        Self { pairs, subcarriers, data: vec![Complex64::new(0.0, 0.0); pairs * subcarriers] }
    }

    pub fn get(&self, pair: usize, m: usize) -> Complex64 {
        self.data[pair * self.subcarriers + m]
    }
}

/// Which contributions [`Channel::synthesize_parts`] includes.
#[derive(Clone, Copy, Debug)]
pub struct Components {
    pub static_paths: bool,
    pub dynamic_paths: bool,
    pub noise: bool,
}

impl Components {
    pub const ALL: Self = Self { static_paths: true, dynamic_paths: true, noise: true };
}

/// A scenario bound to a seed: static-path phases are fixed here, while
/// dynamic phases and noise come from a per-slot stream keyed by `(seed, slot)`.
#[derive(Clone, Debug)]
pub struct Channel {
    scenario: SimScenario,
    seed: u64,
    static_phases: Vec<f64>,
    freqs: Vec<f64>,
}

impl Channel {
    pub fn new(scenario: SimScenario, seed: u64) -> Result<Self, CsiError> {
        scenario.validate()?;
        let count = path_geometry(&scenario, None)?.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let static_phases = (0..count).map(|_| rng.random_range(0.0..TAU)).collect();
        let freqs = (0..scenario.subcarriers).map(|m| scenario.subcarrier_frequency(m)).collect();
        Ok(Self { scenario, seed, static_phases, freqs })
    }

    pub fn scenario(&self) -> &SimScenario {
        &self.scenario
    }

    pub fn static_phases(&self) -> &[f64] {
        &self.static_phases
    }

    fn slot_rng(&self, slot: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(slot as u64 + 1);
        rng
    }

    pub fn synthesize_csi(&self, target: [f64; 2], state: usize, slot: usize) -> Result<CsiMatrix, CsiError> {
        self.synthesize_parts(target, state, slot, Components::ALL)
    }

    /// Like [`Channel::synthesize_csi`] but with individual contributions
    /// switched off. Random draws happen regardless, so the enabled parts are
    /// identical to their counterparts in the full synthesis.
    pub fn synthesize_parts(
        &self,
        target: [f64; 2],
        state: usize,
        slot: usize,
        parts: Components,
    ) -> Result<CsiMatrix, CsiError> {
        let s = &self.scenario;
        let gamma = s
            .states
            .get(state)
            .ok_or_else(|| CsiError::Geometry(format!("unknown state index {state}")))?
            .gamma;
        let paths = path_geometry(s, Some(target))?;
        let mut rng = self.slot_rng(slot);
        let mut csi = CsiMatrix::zeros(s.n_pairs(), s.subcarriers);
        let mut static_idx = 0;
        let mut terms: Vec<Vec<PathTerm>> = vec![Vec::new(); s.n_pairs()];
        for path in &paths {
            match path.kind {
                PathKind::Static => {
                    let phase = self.static_phases[static_idx];
                    static_idx += 1;
                    if parts.static_paths {
                        let gain = static_gain(s.static_gain, path.length)?;
                        terms[path.pair].push(PathTerm { gain, delay: delay(path.length), phase });
                    }
                }
                PathKind::Dynamic => {
                    let phase = rng.random_range(0.0..TAU);
                    if parts.dynamic_paths {
                        let gain = dynamic_gain(s.dynamic_gain, gamma, path.length)?;
                        terms[path.pair].push(PathTerm { gain, delay: delay(path.length), phase });
                    }
                }
            }
        }
        for (pair, pair_terms) in terms.iter().enumerate() {
            let row = superpose(pair_terms, &self.freqs);
            csi.data[pair * s.subcarriers..(pair + 1) * s.subcarriers].copy_from_slice(&row);
        }
        let sd = (s.noise_variance / 2.0).sqrt();
        for h in csi.data.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if parts.noise {
                *h += Complex64::new(sd * re, sd * im);
            }
        }
        Ok(csi)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn static_gain_examples() {
        assert_eq!(static_gain(1.0, 2.0).unwrap(), 0.25);
        assert_eq!(static_gain(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(static_gain(0.5, 4.0).unwrap(), 0.03125);
        assert!(static_gain(1.0, 0.0).is_err());
        assert!(static_gain(1.0, -1.0).is_err());
    }

    #[test]
    fn dynamic_gain_examples() {
        assert_relative_eq!(dynamic_gain(1.0, 0.6, 2.0).unwrap(), 0.15, max_relative = 1e-15);
        assert_eq!(dynamic_gain(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(dynamic_gain(1.0, 0.0, 7.3).unwrap(), 0.0);
        assert!(dynamic_gain(1.0, 0.6, 0.0).is_err());
    }

    #[test]
    fn three_metre_delay() {
        assert_eq!(delay(3.0), 1e-8);
    }

    #[test]
    fn empty_superposition_is_zero() {
        let h = superpose(&[], &[2.4e9, 2.5e9]);
        assert!(h.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn unit_phasor() {
        let h = superpose(&[PathTerm { gain: 1.0, delay: 0.0, phase: 0.0 }], &[2.4e9]);
        assert_eq!(h[0], Complex64::new(1.0, 0.0));
        // offset chosen so that 2π f τ + θ = 0
        let h = superpose(&[PathTerm { gain: 1.0, delay: 1e-9, phase: -TAU * 2.4 }], &[2.4e9]);
        assert!((h[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn no_paths_no_noise_gives_zero_matrix() {
        let scenario = SimScenario { static_paths: 0, dynamic_paths: 0, noise_variance: 0.0, ..Default::default() };
        let ch = Channel::new(scenario, 1).unwrap();
        let h = ch.synthesize_csi([2.0, 1.0], 0, 0).unwrap();
        assert!(h.data.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn shape_matches_pairs_and_subcarriers() {
        let ch = Channel::new(SimScenario::default(), 3).unwrap();
        let h = ch.synthesize_csi([1.0, 1.0], 2, 17).unwrap();
        assert_eq!(h.data.len(), 2 * 32);
    }
}

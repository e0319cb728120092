use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autodiff::sigmoid;

/// Relaxed subcarrier-selection vector `w̄ ∈ [0,1]^N_subs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    relaxed: Vec<f64>,
}

impl Selection {
    pub fn new(relaxed: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((i, v)) = relaxed.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(ModelError::SelectionRange { index: i, value: *v });
        }
        Ok(Self { relaxed })
    }

    /// Every coordinate at 1/2, equidistant from both integer corners.
    pub fn uninformative(n_subs: usize) -> Self {
        Self { relaxed: vec![0.5; n_subs] }
    }

    pub fn relaxed(&self) -> &[f64] {
        &self.relaxed
    }

    pub fn len(&self) -> usize {
        self.relaxed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relaxed.is_empty()
    }

    /// Nearest integer point; exactly 1/2 rounds down.
    pub fn rounded(&self) -> Vec<f64> {
        round_selection(&self.relaxed)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.relaxed
    }
}

pub fn round_selection(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect()
}

/// Scales each subcarrier's feature group by its selection weight. The
/// group size is `features.len() / w.len()` (2 for stacked re/im, 1 for
/// magnitudes).
pub fn apply_selection(features: &[f64], w: &[f64]) -> Result<Vec<f64>, ModelError> {
    if w.is_empty() || !features.len().is_multiple_of(w.len()) {
        return Err(ModelError::SelectionLength { features: features.len(), weights: w.len() });
    }
    let group = features.len() / w.len();
    Ok(features
        .chunks_exact(group)
        .zip(w)
        .flat_map(|(chunk, &wi)| chunk.iter().map(move |v| v * wi))
        .collect())
}

/// Sigmoid parameterization used by the gradient-descent baselines.
pub fn sigmoid_selection_params(raw: &[f64]) -> Selection {
    Selection { relaxed: raw.iter().map(|&r| sigmoid(r)).collect() }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn masks() {
        let f = [2.0, 3.0, 5.0, 7.0];
        assert_eq!(apply_selection(&f, &[1.0, 1.0]).unwrap(), f);
        assert_eq!(apply_selection(&f, &[0.0, 0.0]).unwrap(), [0.0; 4]);
        assert_eq!(apply_selection(&f, &[1.0, 0.0]).unwrap(), [2.0, 3.0, 0.0, 0.0]);
        assert!(apply_selection(&f, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn sigmoid_params() {
        assert_eq!(sigmoid_selection_params(&[0.0]).relaxed(), &[0.5]);
        assert!((sigmoid_selection_params(&[-(3f64.ln())]).relaxed()[0] - 0.25).abs() < 1e-15);
        assert!(sigmoid_selection_params(&[800.0]).relaxed()[0] == 1.0);
        assert!(sigmoid_selection_params(&[-800.0]).relaxed()[0] == 0.0);
    }

    #[test]
    fn rounding_ties_go_down() {
        let s = Selection::new(vec![0.5, 0.500001, 0.2, 1.0]).unwrap();
        assert_eq!(s.rounded(), vec![0.0, 1.0, 0.0, 1.0]);
        assert!(Selection::new(vec![1.2]).is_err());
        assert!(Selection::new(vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_features_and_weights(
            f in prop::collection::vec(-5.0f64..5.0, 8),
            g in prop::collection::vec(-5.0f64..5.0, 8),
            w in prop::collection::vec(0.0f64..1.0, 4),
            v in prop::collection::vec(0.0f64..1.0, 4),
            a in -3.0f64..3.0,
        ) {
            let fg: Vec<f64> = f.iter().zip(&g).map(|(x, y)| x + a * y).collect();
            let lhs = apply_selection(&fg, &w).unwrap();
            let rf = apply_selection(&f, &w).unwrap();
            let rg = apply_selection(&g, &w).unwrap();
            for i in 0..8 {
                prop_assert!((lhs[i] - (rf[i] + a * rg[i])).abs() < 1e-9);
            }
            let wv: Vec<f64> = w.iter().zip(&v).map(|(x, y)| x + a * y).collect();
            let lhs = apply_selection(&f, &wv).unwrap();
            let rw = apply_selection(&f, &v).unwrap();
            for i in 0..8 {
                prop_assert!((lhs[i] - (rf[i] + a * rw[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn permutation_equivariant(
            f in prop::collection::vec(-5.0f64..5.0, 10),
            w in prop::collection::vec(0.0f64..1.0, 5),
            perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let pf: Vec<f64> = perm.iter().flat_map(|&i| [f[2 * i], f[2 * i + 1]]).collect();
            let pw: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
            let out = apply_selection(&f, &w).unwrap();
            let pout: Vec<f64> = perm.iter().flat_map(|&i| [out[2 * i], out[2 * i + 1]]).collect();
            prop_assert_eq!(apply_selection(&pf, &pw).unwrap(), pout);
        }
    }
}

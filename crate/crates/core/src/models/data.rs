use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autodiff::Tensor;
use crate::csi::Dataset;

/// How the sensing target is presented to the sensing model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    /// State index, softmax cross-entropy loss, accuracy metric.
    Classification,
    /// One-hot state vector regressed with MSE.
    #[default]
    Regression,
}

/// Per-feature z-scoring fitted on a training subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[f64], width: usize, rows: &[usize]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for &r in rows {
            mean.iter_mut().zip(&x[r * width..(r + 1) * width]).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for &r in rows {
            for (c, v) in x[r * width..(r + 1) * width].iter().enumerate() {
                var[c] += (v - mean[c]) * (v - mean[c]);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &mut [f64]) {
        let width = self.mean.len();
        for row in x.chunks_exact_mut(width) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// Labels for one mini-batch.
#[derive(Clone, Debug)]
pub enum SensingTargets {
    Classes(Vec<usize>),
    Values(Tensor),
}

/// Model-ready mini-batch.
#[derive(Clone, Debug)]
pub struct Batch {
    pub x: Tensor,
    pub positions: Tensor,
    pub sensing: SensingTargets,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.x.dims2().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Features and labels of a whole dataset in model form.
#[derive(Clone, Debug)]
pub struct TaskData {
    pub x: Vec<f64>,
    pub width: usize,
    pub n_subs: usize,
    pub positions: Vec<f64>,
    pub states: Vec<usize>,
    pub n_states: usize,
    pub sensing_mode: SensingMode,
}

impl TaskData {
    /// Raw (unscaled) features and labels from a CSI dataset.
    pub fn from_dataset(ds: &Dataset, sensing_mode: SensingMode) -> Self {
        let all: Vec<usize> = (0..ds.len()).collect();
        Self {
            x: ds.features(&all),
            width: ds.feature_width(),
            n_subs: ds.n_subs(),
            positions: ds.samples.iter().flat_map(|s| s.position).collect(),
            states: ds.samples.iter().map(|s| s.state).collect(),
            n_states: ds.n_states(),
            sensing_mode,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Copy standardized with statistics of `train_rows`.
    pub fn standardized(&self, train_rows: &[usize]) -> (Self, Standardizer) {
        let st = Standardizer::fit(&self.x, self.width, train_rows);
        let mut out = self.clone();
        st.apply(&mut out.x);
        (out, st)
    }

    pub fn sensing_outputs(&self) -> usize {
        self.n_states
    }

    pub fn batch(&self, rows: &[usize]) -> Result<Batch, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let n = rows.len();
        let x: Vec<f64> = rows.iter().flat_map(|&r| self.x[r * self.width..(r + 1) * self.width].iter().copied()).collect();
        let pos: Vec<f64> = rows.iter().flat_map(|&r| [self.positions[2 * r], self.positions[2 * r + 1]]).collect();
        let sensing = match self.sensing_mode {
            SensingMode::Classification => SensingTargets::Classes(rows.iter().map(|&r| self.states[r]).collect()),
            SensingMode::Regression => {
                let mut v = vec![0.0; n * self.n_states];
                for (i, &r) in rows.iter().enumerate() {
                    v[i * self.n_states + self.states[r]] = 1.0;
                }
                SensingTargets::Values(Tensor::new(&[n, self.n_states], v)?)
            }
        };
        Ok(Batch { x: Tensor::new(&[n, self.width], x)?, positions: Tensor::new(&[n, 2], pos)?, sensing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_centres_and_scales() {
        let x = vec![1.0, 10.0, 3.0, 10.0, 5.0, 10.0];
        let st = Standardizer::fit(&x, 2, &[0, 1, 2]);
        let mut y = x.clone();
        st.apply(&mut y);
        assert!((y[0] + y[2] + y[4]).abs() < 1e-12);
        // constant column keeps unit scale
        assert_eq!(st.scale[1], 1.0);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn one_hot_regression_targets() {
        let data = TaskData {
            x: vec![0.0; 6],
            width: 2,
            n_subs: 1,
            positions: vec![0.0; 6],
            states: vec![2, 0, 1],
            n_states: 3,
            sensing_mode: SensingMode::Regression,
        };
        let b = data.batch(&[0, 2]).unwrap();
        match b.sensing {
            SensingTargets::Values(t) => assert_eq!(t.data(), &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
            _ => panic!(),
        }
        assert!(data.batch(&[]).is_err());
    }
}

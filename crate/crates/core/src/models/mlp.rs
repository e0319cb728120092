use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{Batch, SensingTargets};
use super::ModelError;
use crate::autodiff::{Graph, NodeId, Tensor};

/// Output head of a task network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// 2-D position regressed with MSE.
    Position,
    /// State logits with softmax cross-entropy.
    Classification,
    /// Measurement (one-hot state) vector regressed with MSE.
    Regression,
}

/// How the selection vector enters the network.
#[derive(Clone, Copy, Debug)]
pub enum SelectionParam<'a> {
    /// `w̄` used directly.
    Relaxed(&'a [f64]),
    /// Raw logits; the network sees `sigmoid(raw)`.
    Sigmoid(&'a [f64]),
}

impl SelectionParam<'_> {
    fn values(&self) -> &[f64] {
        match self {
            SelectionParam::Relaxed(v) | SelectionParam::Sigmoid(v) => v,
        }
    }
}

/// Loss and its gradients with respect to the flat parameter vector and the
/// selection parameter (whichever form was passed in).
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub loss: f64,
    pub theta: Vec<f64>,
    pub selection: Vec<f64>,
}

/// Masked multilayer perceptron: `features ⊙ expand(w) → [affine → ReLU]* → affine`.
///
/// Parameters live in one flat vector, layer by layer, each layer as the
/// row-major `[fan_in, fan_out]` weight followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskModel {
    layers: Vec<usize>,
    head: HeadKind,
    n_subs: usize,
    theta: Vec<f64>,
}

struct Built {
    graph: Graph,
    selection: NodeId,
    logits: NodeId,
    loss: Option<NodeId>,
}

impl TaskModel {
    /// Uniform `(-r, r)` initialization with `r = 1/√fan_in` for every weight and bias.
    pub fn new<R: Rng>(
        input: usize,
        hidden: &[usize],
        output: usize,
        head: HeadKind,
        n_subs: usize,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        let mut layers = vec![input];
        layers.extend_from_slice(hidden);
        layers.push(output);
        let mut model = Self::from_parts(layers, head, n_subs, Vec::new())?;
        let mut theta = Vec::with_capacity(model.n_params());
        for pair in model.layers.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let r = 1.0 / (fan_in as f64).sqrt();
            theta.extend((0..fan_in * fan_out + fan_out).map(|_| rng.random_range(-r..r)));
        }
        model.theta = theta;
        Ok(model)
    }

    /// Rebuilds a model from stored parameters. An empty `theta` leaves the
    /// parameters unset; [`TaskModel::set_theta`] must follow.
    pub fn from_parts(layers: Vec<usize>, head: HeadKind, n_subs: usize, theta: Vec<f64>) -> Result<Self, ModelError> {
        if layers.len() < 2 || layers.contains(&0) {
            return Err(ModelError::Architecture(format!("invalid layer sizes {layers:?}")));
        }
        if n_subs == 0 || !layers[0].is_multiple_of(n_subs) {
            return Err(ModelError::Architecture(format!(
                "input width {} is not a multiple of {} subcarriers",
                layers[0], n_subs
            )));
        }
        if head == HeadKind::Position && *layers.last().unwrap() != 2 {
            return Err(ModelError::Architecture("position head needs 2 outputs".into()));
        }
        let model = Self { layers, head, n_subs, theta };
        if !model.theta.is_empty() && model.theta.len() != model.n_params() {
            return Err(ModelError::Architecture(format!(
                "{} parameters supplied, architecture needs {}",
                model.theta.len(),
                model.n_params()
            )));
        }
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layers
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn n_subs(&self) -> usize {
        self.n_subs
    }

    pub fn input_width(&self) -> usize {
        self.layers[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<(), ModelError> {
        if theta.len() != self.n_params() {
            return Err(ModelError::Architecture(format!(
                "{} parameters supplied, architecture needs {}",
                theta.len(),
                self.n_params()
            )));
        }
        self.theta = theta;
        Ok(())
    }

    /// `[n_subs, width]` 0/1 matrix copying each weight onto its feature group.
    fn expansion(&self) -> Tensor {
        let width = self.input_width();
        let group = width / self.n_subs;
        let mut e = vec![0.0; self.n_subs * width];
        for i in 0..self.n_subs {
            for k in 0..group {
                e[i * width + i * group + k] = 1.0;
            }
        }
        Tensor::new(&[self.n_subs, width], e).expect("finite")
    }

    fn build(&self, sel: SelectionParam<'_>, rows: usize, target: Option<&Batch>) -> Result<Built, ModelError> {
        if sel.values().len() != self.n_subs {
            return Err(ModelError::SelectionLength { features: self.n_subs, weights: sel.values().len() });
        }
        let width = self.input_width();
        let mut g = Graph::new();
        let x = g.input(&[rows, width]);
        g.set_label(x, "features");
        let target_input = match (target, self.head) {
            (Some(_), HeadKind::Position) => Some(g.input(&[rows, 2])),
            (Some(b), HeadKind::Regression) => match &b.sensing {
                SensingTargets::Values(t) => Some(g.input(t.shape())),
                SensingTargets::Classes(_) => return Err(ModelError::TargetKind("regression head needs value targets")),
            },
            _ => None,
        };
        let sel_values = Tensor::row(sel.values().to_vec())?;
        let selection = g.param(sel_values);
        g.set_label(selection, "selection");
        let w = match sel {
            SelectionParam::Relaxed(_) => selection,
            SelectionParam::Sigmoid(_) => g.sigmoid(selection)?,
        };
        let e = g.constant(self.expansion());
        let zero = g.constant(Tensor::zeros(&[width]));
        let mask = g.affine(w, e, zero)?;
        let mut h = g.mul(x, mask)?;
        let mut offset = 0;
        let n_layers = self.layers.len() - 1;
        for (li, pair) in self.layers.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let wlen = fan_in * fan_out;
            let wt = Tensor::new(&[fan_in, fan_out], self.theta[offset..offset + wlen].to_vec())?;
            let bt = Tensor::new(&[fan_out], self.theta[offset + wlen..offset + wlen + fan_out].to_vec())?;
            offset += wlen + fan_out;
            let wn = g.param(wt);
            let bn = g.param(bt);
            h = g.affine(h, wn, bn)?;
            if li + 1 < n_layers {
                h = g.relu(h)?;
            }
        }
        let logits = h;
        let loss = match (target, self.head) {
            (None, _) => None,
            (Some(b), HeadKind::Classification) => match &b.sensing {
                SensingTargets::Classes(labels) => Some(g.softmax_cross_entropy(logits, labels.clone())?),
                SensingTargets::Values(_) => return Err(ModelError::TargetKind("classification head needs class labels")),
            },
            (Some(_), _) => Some(g.mse(logits, target_input.expect("target input"))?),
        };
        Ok(Built { graph: g, selection, logits, loss })
    }

    fn inputs(&self, batch: &Batch) -> Vec<Tensor> {
        match (self.head, &batch.sensing) {
            (HeadKind::Position, _) => vec![batch.x.clone(), batch.positions.clone()],
            (HeadKind::Regression, SensingTargets::Values(t)) => vec![batch.x.clone(), t.clone()],
            _ => vec![batch.x.clone()],
        }
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        if batch.x.dims2().1 != self.input_width() {
            return Err(ModelError::SelectionLength { features: batch.x.dims2().1, weights: self.n_subs });
        }
        Ok(())
    }

    pub fn loss(&self, sel: SelectionParam<'_>, batch: &Batch) -> Result<f64, ModelError> {
        self.check_batch(batch)?;
        let mut built = self.build(sel, batch.len(), Some(batch))?;
        let loss = built.loss.expect("loss node");
        built.graph.set_output(loss)?;
        Ok(built.graph.forward(&self.inputs(batch))?.item())
    }

    pub fn loss_grad(&self, sel: SelectionParam<'_>, batch: &Batch) -> Result<LossGrad, ModelError> {
        self.check_batch(batch)?;
        let mut built = self.build(sel, batch.len(), Some(batch))?;
        let loss_node = built.loss.expect("loss node");
        built.graph.set_output(loss_node)?;
        let loss = built.graph.forward(&self.inputs(batch))?.item();
        let grads = built.graph.backward(loss_node)?;
        let mut selection = Vec::new();
        let mut theta = Vec::with_capacity(self.theta.len());
        for (id, grad) in grads.into_entries() {
            if id == built.selection {
                selection = grad.into_data();
            } else {
                theta.extend_from_slice(grad.data());
            }
        }
        Ok(LossGrad { loss, theta, selection })
    }

    /// Network outputs (positions, logits or regressed vectors) for a feature matrix.
    pub fn predict(&self, sel: SelectionParam<'_>, x: &Tensor) -> Result<Tensor, ModelError> {
        let (rows, width) = x.dims2();
        if width != self.input_width() || rows == 0 {
            return Err(ModelError::SelectionLength { features: width, weights: self.n_subs });
        }
        let mut built = self.build(sel, rows, None)?;
        built.graph.set_output(built.logits)?;
        Ok(built.graph.forward(std::slice::from_ref(x))?)
    }
}

/// Mean squared position error of the localization model.
pub fn localization_loss(model: &TaskModel, sel: SelectionParam<'_>, batch: &Batch) -> Result<f64, ModelError> {
    if model.head() != HeadKind::Position {
        return Err(ModelError::TargetKind("localization loss needs a position head"));
    }
    model.loss(sel, batch)
}

/// MSE for regression heads, softmax cross-entropy for classification heads.
pub fn sensing_loss(model: &TaskModel, sel: SelectionParam<'_>, batch: &Batch) -> Result<f64, ModelError> {
    if model.head() == HeadKind::Position {
        return Err(ModelError::TargetKind("sensing loss needs a sensing head"));
    }
    model.loss(sel, batch)
}

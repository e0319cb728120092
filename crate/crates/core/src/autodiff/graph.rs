use super::{AutodiffError, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param,
    Constant,
    /// `x · w + b` with `x: [n, in]`, `w: [in, out]`, `b: [out]` added to every row.
    Affine { x: NodeId, w: NodeId, b: NodeId },
    Relu(NodeId),
    Sigmoid(NodeId),
    /// Elementwise product; the right operand may be a single row shared by every row.
    Mul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Concatenation along the last axis.
    Concat(NodeId, NodeId),
    /// Mean of squared differences over all elements.
    Mse(NodeId, NodeId),
    /// Mean over rows of the softmax cross-entropy against integer labels.
    SoftmaxXent { logits: NodeId, labels: Vec<usize> },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param => "param",
            Op::Constant => "constant",
            Op::Affine { .. } => "affine",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Mul(..) => "mul",
            Op::Add(..) => "add",
            Op::Concat(..) => "concat",
            Op::Mse(..) => "mse",
            Op::SoftmaxXent { .. } => "softmax_xent",
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    requires_grad: bool,
    label: String,
}

/// Gradients produced by [`Graph::backward`], one per parameter in
/// declaration order.
#[derive(Clone, Debug)]
pub struct Gradients {
    entries: Vec<(NodeId, Tensor)>,
}

impl Gradients {
    pub fn get(&self, param: NodeId) -> Option<&Tensor> {
        self.entries.iter().find(|(id, _)| *id == param).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Tensor)> {
        self.entries.iter().map(|(id, t)| (*id, t))
    }

    pub fn into_entries(self) -> Vec<(NodeId, Tensor)> {
        self.entries
    }
}

/// Define-then-run reverse-mode computation graph.
///
/// Nodes are appended in topological order; every builder method checks the
/// operand shapes, so a successfully built graph can only fail at run time on
/// mismatched inputs or non-finite intermediate values.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    values: Vec<Option<Tensor>>,
    inputs: Vec<NodeId>,
    params: Vec<NodeId>,
    output: Option<NodeId>,
    forwarded: bool,
}

fn as_matrix(shape: &[usize]) -> (usize, usize) {
    match shape {
        [] => (1, 1),
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => {
            let c = *shape.last().unwrap();
            (shape.iter().product::<usize>() / c.max(1), c)
        }
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, requires_grad: bool, value: Option<Tensor>) -> NodeId {
        let id = NodeId(self.nodes.len());
        let label = format!("{}#{}", op.kind(), id.0);
        self.nodes.push(Node { op, shape, requires_grad, label });
        self.values.push(value);
        self.output = Some(id);
        self.forwarded = false;
        id
    }

    fn shape_err(&self, label: String, detail: String) -> AutodiffError {
        AutodiffError::ShapeMismatch { node: label, detail }
    }

    fn next_label(&self, kind: &str) -> String {
        format!("{}#{}", kind, self.nodes.len())
    }

    fn check_id(&self, id: NodeId) -> Result<(), AutodiffError> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownNode(id.0))
        }
    }

    /// Declares an input slot with a fixed shape; values are supplied to [`Graph::forward`]
    /// in declaration order.
    pub fn input(&mut self, shape: &[usize]) -> NodeId {
        let id = self.push(Op::Input, shape.to_vec(), false, None);
        self.inputs.push(id);
        id
    }

    pub fn param(&mut self, value: Tensor) -> NodeId {
        let shape = value.shape().to_vec();
        let id = self.push(Op::Param, shape, true, Some(value));
        self.params.push(id);
        id
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        let shape = value.shape().to_vec();
        self.push(Op::Constant, shape, false, Some(value))
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        for id in [x, w, b] {
            self.check_id(id)?;
        }
        let (rows, fan_in) = as_matrix(&self.nodes[x.0].shape);
        let wshape = &self.nodes[w.0].shape;
        if wshape.len() != 2 || wshape[0] != fan_in {
            return Err(self.shape_err(
                self.next_label("affine"),
                format!("input {:?} cannot multiply weight {:?}", self.nodes[x.0].shape, wshape),
            ));
        }
        let out = wshape[1];
        let bn: usize = self.nodes[b.0].shape.iter().product();
        if bn != out {
            return Err(self.shape_err(
                self.next_label("affine"),
                format!("bias {:?} does not match output width {}", self.nodes[b.0].shape, out),
            ));
        }
        let rg = self.rg(&[x, w, b]);
        Ok(self.push(Op::Affine { x, w, b }, vec![rows, out], rg, None))
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(x)?;
        let shape = self.nodes[x.0].shape.clone();
        let rg = self.rg(&[x]);
        Ok(self.push(Op::Relu(x), shape, rg, None))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(x)?;
        let shape = self.nodes[x.0].shape.clone();
        let rg = self.rg(&[x]);
        Ok(self.push(Op::Sigmoid(x), shape, rg, None))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(a)?;
        self.check_id(b)?;
        let sa = &self.nodes[a.0].shape;
        let sb = &self.nodes[b.0].shape;
        let (ra, ca) = as_matrix(sa);
        let (rb, cb) = as_matrix(sb);
        let same = sa == sb;
        let row_broadcast = cb == ca && rb == 1 && sb.len() <= 2;
        if !(same || row_broadcast) {
            return Err(self.shape_err(
                self.next_label("mul"),
                format!("operands {:?} and {:?} are not elementwise compatible", sa, sb),
            ));
        }
        let shape = if same { sa.clone() } else { vec![ra, ca] };
        let rg = self.rg(&[a, b]);
        Ok(self.push(Op::Mul(a, b), shape, rg, None))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(a)?;
        self.check_id(b)?;
        let sa = &self.nodes[a.0].shape;
        let sb = &self.nodes[b.0].shape;
        if sa.iter().product::<usize>() != sb.iter().product::<usize>() || as_matrix(sa) != as_matrix(sb) {
            return Err(self.shape_err(
                self.next_label("add"),
                format!("operands {:?} and {:?} differ in shape", sa, sb),
            ));
        }
        let shape = sa.clone();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Op::Add(a, b), shape, rg, None))
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(a)?;
        self.check_id(b)?;
        let (ra, ca) = as_matrix(&self.nodes[a.0].shape);
        let (rb, cb) = as_matrix(&self.nodes[b.0].shape);
        if ra != rb {
            return Err(self.shape_err(
                self.next_label("concat"),
                format!("row counts {} and {} differ", ra, rb),
            ));
        }
        let rg = self.rg(&[a, b]);
        Ok(self.push(Op::Concat(a, b), vec![ra, ca + cb], rg, None))
    }

    pub fn mse(&mut self, prediction: NodeId, target: NodeId) -> Result<NodeId, AutodiffError> {
        self.check_id(prediction)?;
        self.check_id(target)?;
        let sp = &self.nodes[prediction.0].shape;
        let st = &self.nodes[target.0].shape;
        if as_matrix(sp) != as_matrix(st) {
            return Err(self.shape_err(
                self.next_label("mse"),
                format!("prediction {:?} vs target {:?}", sp, st),
            ));
        }
        if sp.iter().product::<usize>() == 0 {
            return Err(self.shape_err(self.next_label("mse"), "empty operands".into()));
        }
        let rg = self.rg(&[prediction, target]);
        Ok(self.push(Op::Mse(prediction, target), vec![1], rg, None))
    }

    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        labels: Vec<usize>,
    ) -> Result<NodeId, AutodiffError> {
        self.check_id(logits)?;
        let (rows, classes) = as_matrix(&self.nodes[logits.0].shape);
        if labels.len() != rows || rows == 0 {
            return Err(self.shape_err(
                self.next_label("softmax_xent"),
                format!("{} labels for {} logit rows", labels.len(), rows),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(self.shape_err(
                self.next_label("softmax_xent"),
                format!("label {} out of range for {} classes", bad, classes),
            ));
        }
        let rg = self.rg(&[logits]);
        Ok(self.push(Op::SoftmaxXent { logits, labels }, vec![1], rg, None))
    }

    fn rg(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Chooses the node returned by [`Graph::forward`]; defaults to the last node added.
    pub fn set_output(&mut self, id: NodeId) -> Result<(), AutodiffError> {
        self.check_id(id)?;
        self.output = Some(id);
        Ok(())
    }

    pub fn output(&self) -> Option<NodeId> {
        self.output
    }

    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape_of(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn set_label(&mut self, id: NodeId, label: impl Into<String>) {
        self.nodes[id.0].label = label.into();
    }

    pub fn param_value(&self, id: NodeId) -> Option<&Tensor> {
        match self.nodes.get(id.0)?.op {
            Op::Param => self.values[id.0].as_ref(),
            _ => None,
        }
    }

    /// Replaces a parameter value; cached activations are invalidated.
    pub fn set_param(&mut self, id: NodeId, value: Tensor) -> Result<(), AutodiffError> {
        self.check_id(id)?;
        let node = &self.nodes[id.0];
        if !matches!(node.op, Op::Param) {
            return Err(AutodiffError::NotAParameter(node.label.clone()));
        }
        if node.shape != value.shape() {
            return Err(self.shape_err(
                node.label.clone(),
                format!("parameter is {:?}, new value is {:?}", node.shape, value.shape()),
            ));
        }
        self.values[id.0] = Some(value);
        self.forwarded = false;
        Ok(())
    }

    /// Value computed for `id` by the most recent forward pass.
    pub fn value(&self, id: NodeId) -> Option<&Tensor> {
        if !self.forwarded && !matches!(self.nodes.get(id.0)?.op, Op::Param | Op::Constant) {
            return None;
        }
        self.values.get(id.0)?.as_ref()
    }

    pub(crate) fn param_entry_mut(&mut self, id: NodeId, index: usize) -> &mut f64 {
        self.forwarded = false;
        &mut self.values[id.0].as_mut().expect("parameter value").data_mut()[index]
    }

    pub(crate) fn last_inputs(&self) -> Option<Vec<Tensor>> {
        if !self.forwarded {
            return None;
        }
        self.inputs.iter().map(|id| self.values[id.0].clone()).collect()
    }

    /// Evaluates every node given values for the declared inputs and returns
    /// the output node's value. Activations stay cached for [`Graph::backward`].
    pub fn forward(&mut self, inputs: &[Tensor]) -> Result<Tensor, AutodiffError> {
        if inputs.len() != self.inputs.len() {
            return Err(AutodiffError::InputCount { expected: self.inputs.len(), found: inputs.len() });
        }
        let output = self.output.ok_or(AutodiffError::EmptyGraph)?;
        for (slot, tensor) in self.inputs.clone().into_iter().zip(inputs) {
            let node = &self.nodes[slot.0];
            if node.shape != tensor.shape() {
                return Err(self.shape_err(
                    node.label.clone(),
                    format!("declared {:?}, supplied {:?}", node.shape, tensor.shape()),
                ));
            }
            self.values[slot.0] = Some(tensor.clone());
        }
        for i in 0..self.nodes.len() {
            let value = match &self.nodes[i].op {
                Op::Input | Op::Param | Op::Constant => continue,
                op => self.eval(op)?,
            };
            if value.data().iter().any(|v| !v.is_finite()) {
                return Err(AutodiffError::NonFinite(self.nodes[i].label.clone()));
            }
            self.values[i] = Some(value);
        }
        self.forwarded = true;
        Ok(self.values[output.0].clone().expect("output evaluated"))
    }

    fn val(&self, id: NodeId) -> &Tensor {
        self.values[id.0].as_ref().expect("operand evaluated before use")
    }

    fn eval(&self, op: &Op) -> Result<Tensor, AutodiffError> {
        Ok(match op {
            Op::Input | Op::Param | Op::Constant => unreachable!(),
            Op::Affine { x, w, b } => {
                let xv = self.val(*x);
                let wv = self.val(*w).data();
                let bv = self.val(*b).data();
                let (rows, fan_in) = xv.dims2();
                let out = bv.len();
                let mut data = vec![0.0; rows * out];
                for r in 0..rows {
                    let orow = &mut data[r * out..(r + 1) * out];
                    orow.copy_from_slice(bv);
                    let xrow = &xv.data()[r * fan_in..(r + 1) * fan_in];
                    for (i, &xi) in xrow.iter().enumerate() {
                        if xi == 0.0 {
                            continue;
                        }
                        let wrow = &wv[i * out..(i + 1) * out];
                        for (o, &wio) in orow.iter_mut().zip(wrow) {
                            *o += xi * wio;
                        }
                    }
                }
                Tensor::from_parts_unchecked(vec![rows, out], data)
            }
            Op::Relu(x) => {
                let xv = self.val(*x);
                let data = xv.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
                Tensor::from_parts_unchecked(xv.shape().to_vec(), data)
            }
            Op::Sigmoid(x) => {
                let xv = self.val(*x);
                let data = xv.data().iter().map(|&v| sigmoid(v)).collect();
                Tensor::from_parts_unchecked(xv.shape().to_vec(), data)
            }
            Op::Mul(a, b) => {
                let av = self.val(*a);
                let bv = self.val(*b);
                let (rows, cols) = av.dims2();
                let mut data = av.data().to_vec();
                if bv.len() == av.len() {
                    data.iter_mut().zip(bv.data()).for_each(|(x, y)| *x *= y);
                } else {
                    for r in 0..rows {
                        data[r * cols..(r + 1) * cols]
                            .iter_mut()
                            .zip(bv.data())
                            .for_each(|(x, y)| *x *= y);
                    }
                }
                let shape = if bv.len() == av.len() { av.shape().to_vec() } else { vec![rows, cols] };
                Tensor::from_parts_unchecked(shape, data)
            }
            Op::Add(a, b) => {
                let av = self.val(*a);
                let bv = self.val(*b);
                let data = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
                Tensor::from_parts_unchecked(av.shape().to_vec(), data)
            }
            Op::Concat(a, b) => {
                let av = self.val(*a);
                let bv = self.val(*b);
                let (rows, ca) = av.dims2();
                let (_, cb) = bv.dims2();
                let mut data = Vec::with_capacity(rows * (ca + cb));
                for r in 0..rows {
                    data.extend_from_slice(&av.data()[r * ca..(r + 1) * ca]);
                    data.extend_from_slice(&bv.data()[r * cb..(r + 1) * cb]);
                }
                Tensor::from_parts_unchecked(vec![rows, ca + cb], data)
            }
            Op::Mse(p, t) => {
                let pv = self.val(*p).data();
                let tv = self.val(*t).data();
                let sum: f64 = pv.iter().zip(tv).map(|(a, b)| (a - b) * (a - b)).sum();
                Tensor::from_parts_unchecked(vec![1], vec![sum / pv.len() as f64])
            }
            Op::SoftmaxXent { logits, labels } => {
                let lv = self.val(*logits);
                let (rows, classes) = lv.dims2();
                let mut total = 0.0;
                for (r, &label) in labels.iter().enumerate() {
                    let row = &lv.data()[r * classes..(r + 1) * classes];
                    total += log_sum_exp(row) - row[label];
                }
                Tensor::from_parts_unchecked(vec![1], vec![total / rows as f64])
            }
        })
    }

    /// Reverse sweep from a scalar node. Every parameter receives a gradient
    /// tensor of its own shape (zeros when unreachable from `output`).
    pub fn backward(&self, output: NodeId) -> Result<Gradients, AutodiffError> {
        self.check_id(output)?;
        if !self.forwarded {
            return Err(AutodiffError::NotForwarded);
        }
        let out_node = &self.nodes[output.0];
        if out_node.shape.iter().product::<usize>() != 1 {
            return Err(AutodiffError::NonScalarOutput {
                node: out_node.label.clone(),
                shape: out_node.shape.clone(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(vec![1.0]);

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match &node.op {
                Op::Input | Op::Constant => {}
                Op::Param => {
                    grads[i] = Some(g);
                }
                Op::Affine { x, w, b } => {
                    let xv = self.val(*x);
                    let wv = self.val(*w).data();
                    let (rows, fan_in) = xv.dims2();
                    let out = node.shape[1];
                    if self.nodes[b.0].requires_grad {
                        let acc = grad_buf(&mut grads, *b, out);
                        for r in 0..rows {
                            acc.iter_mut().zip(&g[r * out..(r + 1) * out]).for_each(|(a, v)| *a += v);
                        }
                    }
                    if self.nodes[w.0].requires_grad {
                        let acc = grad_buf(&mut grads, *w, fan_in * out);
                        for r in 0..rows {
                            let grow = &g[r * out..(r + 1) * out];
                            let xrow = &xv.data()[r * fan_in..(r + 1) * fan_in];
                            for (i_in, &xi) in xrow.iter().enumerate() {
                                if xi == 0.0 {
                                    continue;
                                }
                                acc[i_in * out..(i_in + 1) * out]
                                    .iter_mut()
                                    .zip(grow)
                                    .for_each(|(a, gv)| *a += xi * gv);
                            }
                        }
                    }
                    if self.nodes[x.0].requires_grad {
                        let acc = grad_buf(&mut grads, *x, rows * fan_in);
                        for r in 0..rows {
                            let grow = &g[r * out..(r + 1) * out];
                            for i_in in 0..fan_in {
                                let wrow = &wv[i_in * out..(i_in + 1) * out];
                                acc[r * fan_in + i_in] +=
                                    wrow.iter().zip(grow).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                    }
                }
                Op::Relu(x) => {
                    let xv = self.val(*x).data();
                    let acc = grad_buf(&mut grads, *x, xv.len());
                    for ((a, gv), xi) in acc.iter_mut().zip(&g).zip(xv) {
                        if *xi > 0.0 {
                            *a += gv;
                        }
                    }
                }
                Op::Sigmoid(x) => {
                    let yv = self.val(NodeId(i)).data();
                    let acc = grad_buf(&mut grads, *x, yv.len());
                    for ((a, gv), y) in acc.iter_mut().zip(&g).zip(yv) {
                        *a += gv * y * (1.0 - y);
                    }
                }
                Op::Mul(a, b) => {
                    let av = self.val(*a);
                    let bv = self.val(*b);
                    let broadcast = bv.len() != av.len();
                    let (rows, cols) = av.dims2();
                    if self.nodes[a.0].requires_grad {
                        let acc = grad_buf(&mut grads, *a, av.len());
                        for (k, (dst, gv)) in acc.iter_mut().zip(&g).enumerate() {
                            let bk = if broadcast { bv.data()[k % cols] } else { bv.data()[k] };
                            *dst += gv * bk;
                        }
                    }
                    if self.nodes[b.0].requires_grad {
                        let acc = grad_buf(&mut grads, *b, bv.len());
                        if broadcast {
                            for r in 0..rows {
                                for c in 0..cols {
                                    acc[c] += g[r * cols + c] * av.data()[r * cols + c];
                                }
                            }
                        } else {
                            for ((dst, gv), ak) in acc.iter_mut().zip(&g).zip(av.data()) {
                                *dst += gv * ak;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    for id in [*a, *b] {
                        if self.nodes[id.0].requires_grad {
                            let acc = grad_buf(&mut grads, id, g.len());
                            acc.iter_mut().zip(&g).for_each(|(d, v)| *d += v);
                        }
                    }
                }
                Op::Concat(a, b) => {
                    let (rows, ca) = as_matrix(&self.nodes[a.0].shape);
                    let (_, cb) = as_matrix(&self.nodes[b.0].shape);
                    let width = ca + cb;
                    if self.nodes[a.0].requires_grad {
                        let acc = grad_buf(&mut grads, *a, rows * ca);
                        for r in 0..rows {
                            for c in 0..ca {
                                acc[r * ca + c] += g[r * width + c];
                            }
                        }
                    }
                    if self.nodes[b.0].requires_grad {
                        let acc = grad_buf(&mut grads, *b, rows * cb);
                        for r in 0..rows {
                            for c in 0..cb {
                                acc[r * cb + c] += g[r * width + ca + c];
                            }
                        }
                    }
                }
                Op::Mse(p, t) => {
                    let pv = self.val(*p).data();
                    let tv = self.val(*t).data();
                    let scale = 2.0 * g[0] / pv.len() as f64;
                    if self.nodes[p.0].requires_grad {
                        let acc = grad_buf(&mut grads, *p, pv.len());
                        for ((d, a), b) in acc.iter_mut().zip(pv).zip(tv) {
                            *d += scale * (a - b);
                        }
                    }
                    if self.nodes[t.0].requires_grad {
                        let acc = grad_buf(&mut grads, *t, tv.len());
                        for ((d, a), b) in acc.iter_mut().zip(pv).zip(tv) {
                            *d -= scale * (a - b);
                        }
                    }
                }
                Op::SoftmaxXent { logits, labels } => {
                    let lv = self.val(*logits);
                    let (rows, classes) = lv.dims2();
                    let scale = g[0] / rows as f64;
                    let acc = grad_buf(&mut grads, *logits, rows * classes);
                    for (r, &label) in labels.iter().enumerate() {
                        let row = &lv.data()[r * classes..(r + 1) * classes];
                        let lse = log_sum_exp(row);
                        for c in 0..classes {
                            let p = (row[c] - lse).exp();
                            let target = if c == label { 1.0 } else { 0.0 };
                            acc[r * classes + c] += scale * (p - target);
                        }
                    }
                }
            }
        }

        let entries = self
            .params
            .iter()
            .map(|&id| {
                let shape = self.nodes[id.0].shape.clone();
                let data = grads[id.0].take().unwrap_or_else(|| vec![0.0; shape.iter().product()]);
                (id, Tensor::from_parts_unchecked(shape, data))
            })
            .collect();
        Ok(Gradients { entries })
    }
}

fn grad_buf(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

//! Eagerly-evaluated computation graph with reverse-mode differentiation.
//!
//! Ops compute their value at node-creation time; `backward` walks the tape
//! in reverse and accumulates gradients into every `requires_grad` leaf.
//! A graph is built per forward pass and discarded afterwards.

use super::tensor::Tensor;
use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// C = A * B
    MatMul,
    /// C = A * B^T
    MatMulNt,
    Add,
    /// matrix + row vector (the only broadcast supported)
    AddBias,
    Scale(f64),
    /// x * s with s a [1,1] node
    MulScalar,
    Relu,
    SoftmaxRows,
    LayerNorm {
        eps: f64,
    },
    GatherRows {
        indices: Vec<usize>,
    },
    ScatterRows {
        indices: Vec<usize>,
    },
    /// Rows move by `offset` (+1: row i receives row i-1); vacated rows are zero.
    ShiftRows {
        offset: i64,
    },
    MeanRows,
    MeanAll,
    ConcatRows,
    CrossEntropy {
        targets: Vec<usize>,
    },
    /// Row-wise top-k retention mask; `kept` holds flat indices fixed at forward.
    TopKMask {
        kept: Vec<usize>,
    },
    Pick {
        row: usize,
        col: usize,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Graph {
            nodes: Vec::with_capacity(n),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` loss w.r.t. this node, if it was computed.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor) -> NodeId {
        let requires = inputs.iter().any(|&i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            op,
            inputs,
            value,
            requires_grad: requires,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn mismatch(op: &str, left: &Tensor, right: &Tensor) -> NumericsError {
        NumericsError::ShapeMismatch {
            op: op.to_string(),
            left: left.shape().to_vec(),
            right: right.shape().to_vec(),
        }
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(Self::mismatch("matmul", va, vb));
        }
        let value = matmul_val(va, vb);
        Ok(self.push(Op::MatMul, vec![a, b], value))
    }

    /// a * b^T
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.cols() {
            return Err(Self::mismatch("matmul_nt", va, vb));
        }
        let value = matmul_nt_val(va, vb);
        Ok(self.push(Op::MatMulNt, vec![a, b], value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.same_shape(vb) {
            return Err(Self::mismatch("add", va, vb));
        }
        let mut value = va.clone();
        value.add_assign(vb);
        Ok(self.push(Op::Add, vec![a, b], value))
    }

    /// matrix [n,d] + row vector [1,d]
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, NumericsError> {
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.rows() != 1 || va.cols() != vb.cols() {
            return Err(Self::mismatch("add_bias", va, vb));
        }
        let d = va.cols();
        let mut value = va.clone();
        for i in 0..value.rows() {
            let row = &mut value.data_mut()[i * d..(i + 1) * d];
            for (x, b) in row.iter_mut().zip(vb.data()) {
                *x += b;
            }
        }
        Ok(self.push(Op::AddBias, vec![a, bias], value))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).map(|x| c * x);
        self.push(Op::Scale(c), vec![a], value)
    }

    /// Elementwise multiply by a [1,1] node.
    pub fn mul_scalar(&mut self, a: NodeId, s: NodeId) -> Result<NodeId, NumericsError> {
        let vs = self.value(s);
        if vs.len() != 1 {
            return Err(Self::mismatch("mul_scalar", self.value(a), vs));
        }
        let c = vs.item();
        let value = self.value(a).map(|x| c * x);
        Ok(self.push(Op::MulScalar, vec![a, s], value))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push(Op::Relu, vec![a], value)
    }

    /// Softmax along each row, stabilized by max subtraction.
    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let (n, d) = (va.rows(), va.cols());
        let mut value = va.clone();
        for i in 0..n {
            softmax_in_place(&mut value.data_mut()[i * d..(i + 1) * d]);
        }
        self.push(Op::SoftmaxRows, vec![a], value)
    }

    /// Row-wise layer normalization with affine gain/bias ([1,d] each).
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        eps: f64,
    ) -> Result<NodeId, NumericsError> {
        let (vx, vg, vb) = (self.value(x), self.value(gain), self.value(bias));
        let d = vx.cols();
        if vg.rows() != 1 || vg.cols() != d {
            return Err(Self::mismatch("layer_norm", vx, vg));
        }
        if vb.rows() != 1 || vb.cols() != d {
            return Err(Self::mismatch("layer_norm", vx, vb));
        }
        let n = vx.rows();
        let mut value = Tensor::zeros(&[n, d]);
        for i in 0..n {
            let row = vx.row(i);
            let (mu, inv_std) = norm_stats(row, eps);
            let out = &mut value.data_mut()[i * d..(i + 1) * d];
            for j in 0..d {
                out[j] = (row[j] - mu) * inv_std * vg.data()[j] + vb.data()[j];
            }
        }
        Ok(self.push(Op::LayerNorm { eps }, vec![x, gain, bias], value))
    }

    /// Select rows by index; also serves as embedding lookup on a table leaf.
    pub fn gather_rows(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId, NumericsError> {
        let va = self.value(a);
        let (n, d) = (va.rows(), va.cols());
        for &i in indices {
            if i >= n {
                return Err(NumericsError::IndexOutOfRange {
                    op: "gather_rows".to_string(),
                    index: i,
                    bound: n,
                });
            }
        }
        let mut value = Tensor::zeros(&[indices.len(), d]);
        for (r, &i) in indices.iter().enumerate() {
            value.data_mut()[r * d..(r + 1) * d].copy_from_slice(va.row(i));
        }
        Ok(self.push(
            Op::GatherRows {
                indices: indices.to_vec(),
            },
            vec![a],
            value,
        ))
    }

    /// Place row r of the input at `indices[r]` in a zero [out_rows, d] tensor.
    pub fn scatter_rows(
        &mut self,
        a: NodeId,
        indices: &[usize],
        out_rows: usize,
    ) -> Result<NodeId, NumericsError> {
        let va = self.value(a);
        let d = va.cols();
        if indices.len() != va.rows() {
            return Err(Self::mismatch(
                "scatter_rows",
                va,
                &Tensor::zeros(&[indices.len(), d]),
            ));
        }
        for &i in indices {
            if i >= out_rows {
                return Err(NumericsError::IndexOutOfRange {
                    op: "scatter_rows".to_string(),
                    index: i,
                    bound: out_rows,
                });
            }
        }
        let mut value = Tensor::zeros(&[out_rows, d]);
        for (r, &i) in indices.iter().enumerate() {
            let dst = &mut value.data_mut()[i * d..(i + 1) * d];
            for (x, v) in dst.iter_mut().zip(va.row(r)) {
                *x += v;
            }
        }
        Ok(self.push(
            Op::ScatterRows {
                indices: indices.to_vec(),
            },
            vec![a],
            value,
        ))
    }

    pub fn shift_rows(&mut self, a: NodeId, offset: i64) -> NodeId {
        let va = self.value(a);
        let (n, d) = (va.rows(), va.cols());
        let mut value = Tensor::zeros(&[n, d]);
        for i in 0..n as i64 {
            let src = i - offset;
            if src >= 0 && src < n as i64 {
                let dst = &mut value.data_mut()[i as usize * d..(i as usize + 1) * d];
                dst.copy_from_slice(va.row(src as usize));
            }
        }
        self.push(Op::ShiftRows { offset }, vec![a], value)
    }

    /// Mean over rows: [n,d] -> [1,d].
    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let (n, d) = (va.rows(), va.cols());
        let mut value = Tensor::zeros(&[1, d]);
        for i in 0..n {
            for (acc, x) in value.data_mut().iter_mut().zip(va.row(i)) {
                *acc += x;
            }
        }
        for x in value.data_mut() {
            *x /= n as f64;
        }
        self.push(Op::MeanRows, vec![a], value)
    }

    /// Mean over all elements: -> [1,1].
    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let mean = va.data().iter().sum::<f64>() / va.len() as f64;
        self.push(Op::MeanAll, vec![a], Tensor::scalar(mean))
    }

    /// Stack inputs vertically (all must share a column count).
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, NumericsError> {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let d = self.value(parts[0]).cols();
        let mut rows = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.cols() != d {
                return Err(Self::mismatch("concat_rows", self.value(parts[0]), v));
            }
            rows.push(v.rows());
        }
        let total: usize = rows.iter().sum();
        let mut value = Tensor::zeros(&[total, d]);
        let mut at = 0;
        for &p in parts {
            let v = self.value(p);
            value.data_mut()[at * d..(at + v.rows()) * d].copy_from_slice(v.data());
            at += v.rows();
        }
        Ok(self.push(Op::ConcatRows, parts.to_vec(), value))
    }

    /// Token-averaged cross entropy from logits [n,v] and one target id per row.
    pub fn cross_entropy(
        &mut self,
        logits: NodeId,
        targets: &[usize],
    ) -> Result<NodeId, NumericsError> {
        let vl = self.value(logits);
        let (n, v) = (vl.rows(), vl.cols());
        if targets.len() != n {
            return Err(Self::mismatch(
                "cross_entropy",
                vl,
                &Tensor::zeros(&[targets.len(), 1]),
            ));
        }
        for &t in targets {
            if t >= v {
                return Err(NumericsError::IndexOutOfRange {
                    op: "cross_entropy".to_string(),
                    index: t,
                    bound: v,
                });
            }
        }
        let mut total = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            let row = vl.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            total += lse - row[t];
        }
        let value = Tensor::scalar(total / n as f64);
        Ok(self.push(
            Op::CrossEntropy {
                targets: targets.to_vec(),
            },
            vec![logits],
            value,
        ))
    }

    /// Keep the k largest entries of each row, zero the rest. Ties break
    /// toward the lower column index.
    pub fn top_k_mask(&mut self, a: NodeId, k: usize) -> NodeId {
        let va = self.value(a);
        let (n, d) = (va.rows(), va.cols());
        let k = k.min(d);
        let mut value = Tensor::zeros(&[n, d]);
        let mut kept = Vec::with_capacity(n * k);
        for i in 0..n {
            let row = va.row(i);
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&x, &y| row[y].partial_cmp(&row[x]).unwrap().then(x.cmp(&y)));
            for &j in order.iter().take(k) {
                value.data_mut()[i * d + j] = row[j];
                kept.push(i * d + j);
            }
        }
        self.push(Op::TopKMask { kept }, vec![a], value)
    }

    /// Extract one element as a [1,1] node.
    pub fn pick(&mut self, a: NodeId, row: usize, col: usize) -> Result<NodeId, NumericsError> {
        let va = self.value(a);
        if row >= va.rows() || col >= va.cols() {
            return Err(NumericsError::IndexOutOfRange {
                op: "pick".to_string(),
                index: row * va.cols() + col,
                bound: va.len(),
            });
        }
        let value = Tensor::scalar(va.at(row, col));
        Ok(self.push(Op::Pick { row, col }, vec![a], value))
    }

    /// Reverse accumulation from a scalar loss. Gradients of all
    /// `requires_grad` nodes become available through `grad`.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), NumericsError> {
        if self.value(loss).len() != 1 {
            return Err(NumericsError::NonScalarLoss {
                shape: self.value(loss).shape().to_vec(),
            });
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(Tensor::filled(self.value(loss).shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad || self.grads[idx].is_none() {
                continue;
            }
            let dy = self.grads[idx].take().unwrap();
            self.propagate(idx, &dy);
            self.grads[idx] = Some(dy);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: NodeId, delta: Tensor) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut self.grads[id.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&mut self, idx: usize, dy: &Tensor) {
        let inputs = self.nodes[idx].inputs.clone();
        let op = self.nodes[idx].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul => {
                let (a, b) = (inputs[0], inputs[1]);
                if self.nodes[a.0].requires_grad {
                    let da = matmul_nt_val(dy, self.value(b));
                    self.accumulate(a, da);
                }
                if self.nodes[b.0].requires_grad {
                    let db = matmul_tn_val(self.value(a), dy);
                    self.accumulate(b, db);
                }
            }
            Op::MatMulNt => {
                let (a, b) = (inputs[0], inputs[1]);
                if self.nodes[a.0].requires_grad {
                    let da = matmul_val(dy, self.value(b));
                    self.accumulate(a, da);
                }
                if self.nodes[b.0].requires_grad {
                    let db = matmul_tn_val(dy, self.value(a));
                    self.accumulate(b, db);
                }
            }
            Op::Add => {
                self.accumulate(inputs[0], dy.clone());
                self.accumulate(inputs[1], dy.clone());
            }
            Op::AddBias => {
                self.accumulate(inputs[0], dy.clone());
                let d = dy.cols();
                let mut db = Tensor::zeros(&[1, d]);
                for i in 0..dy.rows() {
                    for (acc, x) in db.data_mut().iter_mut().zip(dy.row(i)) {
                        *acc += x;
                    }
                }
                self.accumulate(inputs[1], db);
            }
            Op::Scale(c) => {
                self.accumulate(inputs[0], dy.map(|x| c * x));
            }
            Op::MulScalar => {
                let (a, s) = (inputs[0], inputs[1]);
                let c = self.value(s).item();
                if self.nodes[a.0].requires_grad {
                    self.accumulate(a, dy.map(|x| c * x));
                }
                if self.nodes[s.0].requires_grad {
                    let dot = dy
                        .data()
                        .iter()
                        .zip(self.value(a).data())
                        .map(|(g, x)| g * x)
                        .sum::<f64>();
                    self.accumulate(s, Tensor::scalar(dot));
                }
            }
            Op::Relu => {
                let out = &self.nodes[idx].value;
                let mut dx = dy.clone();
                for (g, &y) in dx.data_mut().iter_mut().zip(out.data()) {
                    if y <= 0.0 {
                        *g = 0.0;
                    }
                }
                self.accumulate(inputs[0], dx);
            }
            Op::SoftmaxRows => {
                let y = self.nodes[idx].value.clone();
                let (n, d) = (y.rows(), y.cols());
                let mut dx = Tensor::zeros(&[n, d]);
                for i in 0..n {
                    let yr = y.row(i);
                    let gr = dy.row(i);
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    let out = &mut dx.data_mut()[i * d..(i + 1) * d];
                    for j in 0..d {
                        out[j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(inputs[0], dx);
            }
            Op::LayerNorm { eps } => {
                let (x, gain, bias) = (inputs[0], inputs[1], inputs[2]);
                let vx = self.value(x).clone();
                let vg = self.value(gain).clone();
                let (n, d) = (vx.rows(), vx.cols());
                let mut dx = Tensor::zeros(&[n, d]);
                let mut dg = Tensor::zeros(&[1, d]);
                let mut db = Tensor::zeros(&[1, d]);
                for i in 0..n {
                    let row = vx.row(i);
                    let (mu, inv_std) = norm_stats(row, eps);
                    let xhat: Vec<f64> = row.iter().map(|&v| (v - mu) * inv_std).collect();
                    let gr = dy.row(i);
                    for j in 0..d {
                        dg.data_mut()[j] += gr[j] * xhat[j];
                        db.data_mut()[j] += gr[j];
                    }
                    let dxhat: Vec<f64> = (0..d).map(|j| gr[j] * vg.data()[j]).collect();
                    let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
                    let mean_dxhat_xhat =
                        dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    let out = &mut dx.data_mut()[i * d..(i + 1) * d];
                    for j in 0..d {
                        out[j] = inv_std * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                    }
                }
                self.accumulate(x, dx);
                self.accumulate(gain, dg);
                self.accumulate(bias, db);
            }
            Op::GatherRows { indices } => {
                let src = self.value(inputs[0]);
                let (n, d) = (src.rows(), src.cols());
                let mut dx = Tensor::zeros(&[n, d]);
                for (r, &i) in indices.iter().enumerate() {
                    let dst = &mut dx.data_mut()[i * d..(i + 1) * d];
                    for (acc, g) in dst.iter_mut().zip(dy.row(r)) {
                        *acc += g;
                    }
                }
                self.accumulate(inputs[0], dx);
            }
            Op::ScatterRows { indices } => {
                let d = dy.cols();
                let mut dx = Tensor::zeros(&[indices.len(), d]);
                for (r, &i) in indices.iter().enumerate() {
                    dx.data_mut()[r * d..(r + 1) * d].copy_from_slice(dy.row(i));
                }
                self.accumulate(inputs[0], dx);
            }
            Op::ShiftRows { offset } => {
                let dx = {
                    let (n, d) = (dy.rows(), dy.cols());
                    let mut t = Tensor::zeros(&[n, d]);
                    for i in 0..n as i64 {
                        let dst = i - offset;
                        if dst >= 0 && dst < n as i64 {
                            t.data_mut()[dst as usize * d..(dst as usize + 1) * d]
                                .copy_from_slice(dy.row(i as usize));
                        }
                    }
                    t
                };
                self.accumulate(inputs[0], dx);
            }
            Op::MeanRows => {
                let src = self.value(inputs[0]);
                let (n, d) = (src.rows(), src.cols());
                let mut dx = Tensor::zeros(&[n, d]);
                for i in 0..n {
                    let out = &mut dx.data_mut()[i * d..(i + 1) * d];
                    for (acc, g) in out.iter_mut().zip(dy.row(0)) {
                        *acc = g / n as f64;
                    }
                }
                self.accumulate(inputs[0], dx);
            }
            Op::MeanAll => {
                let src = self.value(inputs[0]);
                let scale = dy.item() / src.len() as f64;
                let dx = Tensor::filled(src.shape(), scale);
                self.accumulate(inputs[0], dx);
            }
            Op::ConcatRows => {
                let mut at = 0;
                let d = dy.cols();
                for &p in &inputs {
                    let rows = self.value(p).rows();
                    let mut part = Tensor::zeros(&[rows, d]);
                    part.data_mut()
                        .copy_from_slice(&dy.data()[at * d..(at + rows) * d]);
                    at += rows;
                    self.accumulate(p, part);
                }
            }
            Op::CrossEntropy { targets } => {
                let logits = self.value(inputs[0]);
                let (n, v) = (logits.rows(), logits.cols());
                let scale = dy.item() / n as f64;
                let mut dx = Tensor::zeros(&[n, v]);
                for (i, &t) in targets.iter().enumerate() {
                    let row = logits.row(i);
                    let out = &mut dx.data_mut()[i * v..(i + 1) * v];
                    out.copy_from_slice(row);
                    softmax_in_place(out);
                    out[t] -= 1.0;
                    for x in out.iter_mut() {
                        *x *= scale;
                    }
                }
                self.accumulate(inputs[0], dx);
            }
            Op::TopKMask { kept } => {
                let mut dx = Tensor::zeros(dy.shape());
                for &flat in &kept {
                    dx.data_mut()[flat] = dy.data()[flat];
                }
                self.accumulate(inputs[0], dx);
            }
            Op::Pick { row, col } => {
                let src = self.value(inputs[0]);
                let mut dx = Tensor::zeros(src.shape());
                let c = src.cols();
                dx.data_mut()[row * c + col] = dy.item();
                self.accumulate(inputs[0], dx);
            }
        }
    }
}

fn norm_stats(row: &[f64], eps: f64) -> (f64, f64) {
    let d = row.len() as f64;
    let mu = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / d;
    (mu, 1.0 / (var + eps).sqrt())
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn matmul_val(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut c = Tensor::zeros(&[m, n]);
    for i in 0..m {
        let arow = a.row(i);
        let crow = &mut c.data_mut()[i * n..(i + 1) * n];
        for (l, &av) in arow.iter().enumerate().take(k) {
            if av == 0.0 {
                continue;
            }
            let brow = b.row(l);
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
    c
}

/// a * b^T
pub(crate) fn matmul_nt_val(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, n) = (a.rows(), b.rows());
    let mut c = Tensor::zeros(&[m, n]);
    for i in 0..m {
        let arow = a.row(i);
        let crow = &mut c.data_mut()[i * n..(i + 1) * n];
        for j in 0..n {
            crow[j] = arow.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    c
}

/// a^T * b
pub(crate) fn matmul_tn_val(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.cols(), a.rows(), b.cols());
    let mut c = Tensor::zeros(&[m, n]);
    for l in 0..k {
        let arow = a.row(l);
        let brow = b.row(l);
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let crow = &mut c.data_mut()[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![1, 3], vec![0.0, 0.0, 0.0]));
        let y = g.softmax_rows(x);
        for &v in g.value(y).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_are_positive() {
        let mut g = Graph::new();
        let mut rng = crate::numerics::Rng::new(9);
        let x = g.constant(Tensor::randn(&[5, 7], 3.0, &mut rng));
        let y = g.softmax_rows(x);
        for i in 0..5 {
            let row = g.value(y).row(i);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn matmul_by_identity_is_identity() {
        let mut g = Graph::new();
        let eye = g.constant(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]));
        let a = g.constant(Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let c = g.matmul(eye, a).unwrap();
        assert_eq!(g.value(c).data(), g.value(a).data());
    }

    #[test]
    fn cross_entropy_of_uniform_logits_is_ln_vocab() {
        let mut g = Graph::new();
        let logits = g.constant(Tensor::new(vec![1, 2], vec![0.0, 0.0]));
        let loss = g.cross_entropy(logits, &[0]).unwrap();
        assert!((g.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn scale_gradient_is_the_constant() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![2, 2], vec![1.0, -2.0, 3.0, 0.5]), true);
        let y = g.scale(x, 2.5);
        let loss = g.mean_all(y);
        let loss = g.scale(loss, 4.0); // undo the 1/4 of mean for a clean value
        g.backward(loss).unwrap();
        for &v in g.grad(x).unwrap().data() {
            assert!((v - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_gradient_is_one_over_n() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]), true);
        let loss = g.mean_all(x);
        g.backward(loss).unwrap();
        for &v in g.grad(x).unwrap().data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_accumulate_across_uses() {
        // loss = mean(x + x) => dloss/dx = 2/n
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![1, 4], vec![1.0, 2.0, 3.0, 4.0]), true);
        let y = g.add(x, x).unwrap();
        let loss = g.mean_all(y);
        g.backward(loss).unwrap();
        for &v in g.grad(x).unwrap().data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[2, 2]), true);
        let err = g.backward(x).unwrap_err();
        assert!(matches!(err, NumericsError::NonScalarLoss { .. }));
    }

    #[test]
    fn top_k_breaks_ties_toward_lower_index() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![1, 4], vec![0.5, 0.5, 0.5, 0.5]));
        let y = g.top_k_mask(x, 1);
        assert_eq!(g.value(y).data(), &[0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn top_k_with_k_equal_width_is_identity() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![1, 3], vec![0.2, 0.5, 0.3]));
        let y = g.top_k_mask(x, 3);
        assert_eq!(g.value(y).data(), g.value(x).data());
    }

    #[test]
    fn shift_rows_zero_fills() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![3, 1], vec![1.0, 2.0, 3.0]));
        let down = g.shift_rows(x, 1);
        assert_eq!(g.value(down).data(), &[0.0, 1.0, 2.0]);
        let up = g.shift_rows(x, -1);
        assert_eq!(g.value(up).data(), &[2.0, 3.0, 0.0]);
    }

    #[test]
    fn scatter_then_gather_round_trips() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
        let spread = g.scatter_rows(x, &[3, 0], 4).unwrap();
        let back = g.gather_rows(spread, &[3, 0]).unwrap();
        assert_eq!(g.value(back).data(), g.value(x).data());
    }

    #[test]
    fn gather_out_of_range_reports_bound() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[2, 2]));
        let err = g.gather_rows(x, &[5]).unwrap_err();
        assert!(matches!(
            err,
            NumericsError::IndexOutOfRange { index: 5, bound: 2, .. }
        ));
    }
}

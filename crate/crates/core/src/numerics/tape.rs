//! Reverse-mode differentiation over a recorded tape.
//!
//! Every operation appends a node holding its forward result and enough
//! context to run its pullback. `backward` walks the tape in reverse from a
//! scalar loss and *adds* the resulting adjoints to each node's persistent
//! gradient slot, so calling it twice without [`Tape::zero_grad`] doubles the
//! stored gradients.

use crate::error::{Error, Result};
use crate::numerics::param::{ParamId, ParamStore};
use crate::numerics::tensor::{gemm, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(usize);

impl Value {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    Relu,
    Log,
    Exp,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Value, Value),
    /// a · bᵀ
    MatMulT(Value, Value),
    Add(Value, Value),
    Sub(Value, Value),
    Mul(Value, Value),
    Relu(Value),
    Log(Value),
    Exp(Value),
    Scale(Value, f64),
    AddBias(Value, Value),
    Sum(Value),
    LogSoftmax(Value),
    Concat { parts: Vec<Value>, axis: usize },
    Gather { input: Value, index: Vec<usize> },
    WindowStats { input: Value, back: usize, ahead: usize },
    RmsNorm { input: Value, inv_rms: Vec<f64> },
    WindowAttention(Box<AttentionCtx>),
    /// Scalar computed outside the tape whose gradient w.r.t. each parent is known.
    External { parents: Vec<Value>, grads: Vec<Tensor> },
}

#[derive(Debug)]
struct AttentionCtx {
    q: Value,
    k: Value,
    v: Value,
    back: usize,
    ahead: usize,
    /// Per frame: (window start, softmax weights over the window).
    weights: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    requires_grad: bool,
    op: Op,
}

/// Records a differentiation graph. Confined to one thread.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(ParamId, Value)>,
}

fn shape_err(what: &str, a: &[usize], b: &[usize]) -> Error {
    Error::ShapeMismatch(format!("{what}: {a:?} vs {b:?}"))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Value]) -> Value {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Value(self.nodes.len() - 1)
    }

    /// Constant input; no gradient is propagated into it.
    pub fn constant(&mut self, t: Tensor) -> Value {
        self.nodes.push(Node {
            value: t,
            grad: None,
            requires_grad: false,
            op: Op::Leaf,
        });
        Value(self.nodes.len() - 1)
    }

    /// Differentiable leaf.
    pub fn variable(&mut self, t: Tensor) -> Value {
        self.nodes.push(Node {
            value: t,
            grad: None,
            requires_grad: true,
            op: Op::Leaf,
        });
        Value(self.nodes.len() - 1)
    }

    /// Leaf bound to a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Value {
        if let Some(&(_, v)) = self.params.iter().find(|(p, _)| *p == id) {
            return v;
        }
        let v = self.variable(store.get(id).value.clone());
        self.params.push((id, v));
        v
    }

    /// Parameters touched by this tape, in first-use order.
    pub fn bound_params(&self) -> &[(ParamId, Value)] {
        &self.params
    }

    pub fn value(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Value) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn scalar(&self, v: Value) -> f64 {
        self.nodes[v.0].value.item()
    }

    /// Accumulated gradient; zeros if backward never reached the node.
    pub fn grad(&self, v: Value) -> Tensor {
        let n = &self.nodes[v.0];
        n.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(n.value.shape()))
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    // ---- forward ops -------------------------------------------------

    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    /// `a · bᵀ`; weights stored as `[out × in]` multiply row-major frames.
    pub fn matmul_t(&mut self, a: Value, b: Value) -> Result<Value> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = (ta.rows(), ta.cols());
        let (n, k2) = (tb.rows(), tb.cols());
        if k != k2 {
            return Err(shape_err("matmul_t", ta.shape(), tb.shape()));
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, ta.data(), false, tb.data(), true, &mut out, 0.0);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMulT(a, b), &[a, b]))
    }

    pub fn elementwise(&mut self, op: Elementwise, args: &[Value]) -> Result<Value> {
        let arity = match op {
            Elementwise::Add | Elementwise::Sub | Elementwise::Mul => 2,
            _ => 1,
        };
        if args.len() != arity {
            return Err(Error::ShapeMismatch(format!(
                "{op:?} takes {arity} operands, got {}",
                args.len()
            )));
        }
        match op {
            Elementwise::Add => self.add(args[0], args[1]),
            Elementwise::Sub => self.sub(args[0], args[1]),
            Elementwise::Mul => self.mul(args[0], args[1]),
            Elementwise::Relu => Ok(self.relu(args[0])),
            Elementwise::Log => self.log(args[0]),
            Elementwise::Exp => Ok(self.exp(args[0])),
        }
    }

    fn binary(&mut self, a: Value, b: Value, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(what, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary(a, b, "add")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary(a, b, "sub")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary(a, b, "mul")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn relu(&mut self, a: Value) -> Value {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a), &[a])
    }

    pub fn log(&mut self, a: Value) -> Result<Value> {
        if let Some(bad) = self.value(a).data().iter().find(|&&x| x <= 0.0) {
            return Err(Error::DomainError(format!("log of {bad}")));
        }
        let out = self.value(a).map(f64::ln);
        Ok(self.push(out, Op::Log(a), &[a]))
    }

    pub fn exp(&mut self, a: Value) -> Value {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a), &[a])
    }

    pub fn scale(&mut self, a: Value, c: f64) -> Value {
        let out = self.value(a).map(|x| c * x);
        self.push(out, Op::Scale(a, c), &[a])
    }

    /// Adds a bias vector (length = column count) to every row.
    pub fn add_bias(&mut self, x: Value, b: Value) -> Result<Value> {
        let (tx, tb) = (self.value(x), self.value(b));
        let c = tx.cols();
        if tb.len() != c {
            return Err(shape_err("add_bias", tx.shape(), tb.shape()));
        }
        let mut out = tx.clone();
        for row in out.data_mut().chunks_mut(c) {
            for (o, bias) in row.iter_mut().zip(tb.data()) {
                *o += bias;
            }
        }
        Ok(self.push(out, Op::AddBias(x, b), &[x, b]))
    }

    pub fn sum(&mut self, a: Value) -> Value {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax(&mut self, z: Value) -> Result<Value> {
        let tz = self.value(z);
        let c = tz.cols();
        if c == 0 {
            return Err(Error::ShapeMismatch("log_softmax over zero columns".into()));
        }
        let mut out = tz.clone();
        for row in out.data_mut().chunks_mut(c) {
            let lse = log_sum_exp(row);
            row.iter_mut().for_each(|v| *v -= lse);
        }
        Ok(self.push(out, Op::LogSoftmax(z), &[z]))
    }

    /// Concatenates 2-D values along `axis` (0 = frames, 1 = features).
    pub fn concat(&mut self, parts: &[Value], axis: usize) -> Result<Value> {
        if parts.is_empty() || axis > 1 {
            return Err(Error::ShapeMismatch(format!(
                "concat of {} parts on axis {axis}",
                parts.len()
            )));
        }
        let first = self.value(parts[0]);
        let (r0, c0) = (first.rows(), first.cols());
        for &p in &parts[1..] {
            let t = self.value(p);
            let ok = if axis == 0 { t.cols() == c0 } else { t.rows() == r0 };
            if !ok {
                return Err(shape_err("concat", first.shape(), t.shape()));
            }
        }
        let out = if axis == 0 {
            let rows: usize = parts.iter().map(|&p| self.value(p).rows()).sum();
            let mut data = Vec::with_capacity(rows * c0);
            for &p in parts {
                data.extend_from_slice(self.value(p).data());
            }
            Tensor::from_parts(vec![rows, c0], data)
        } else {
            let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
            let mut data = Vec::with_capacity(r0 * cols);
            for r in 0..r0 {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row(r));
                }
            }
            Tensor::from_parts(vec![r0, cols], data)
        };
        Ok(self.push(
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            parts,
        ))
    }

    /// `out.flat[i] = input.flat[index[i]]`; backward scatters-adds.
    pub fn gather(&mut self, input: Value, index: Vec<usize>, shape: Vec<usize>) -> Result<Value> {
        let src = self.value(input);
        if shape.iter().product::<usize>() != index.len() || shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "gather shape {shape:?} for {} indices",
                index.len()
            )));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(Error::ShapeMismatch(format!(
                "gather index {bad} out of {}",
                src.len()
            )));
        }
        let data = index.iter().map(|&i| src.data()[i]).collect();
        Ok(self.push(
            Tensor::from_parts(shape, data),
            Op::Gather { input, index },
            &[input],
        ))
    }

    /// Splices rows at the given frame offsets, clamping at the edges:
    /// `out[t] = x[clamp(t+o_1)] ⊕ … ⊕ x[clamp(t+o_n)]`.
    pub fn splice(&mut self, x: Value, offsets: &[isize]) -> Result<Value> {
        let t = self.value(x);
        let (rows, cols) = (t.rows(), t.cols());
        let mut index = Vec::with_capacity(rows * cols * offsets.len());
        for r in 0..rows {
            for &o in offsets {
                let src = clamp_frame(r as isize + o, rows);
                index.extend(src * cols..(src + 1) * cols);
            }
        }
        self.gather(x, index, vec![rows, cols * offsets.len()])
    }

    /// Row selection `out[i] = x[rows[i]]`.
    pub fn select_rows(&mut self, x: Value, rows: &[usize]) -> Result<Value> {
        let cols = self.value(x).cols();
        let index = rows
            .iter()
            .flat_map(|&r| r * cols..(r + 1) * cols)
            .collect();
        self.gather(x, index, vec![rows.len(), cols])
    }

    /// Sliding-window mean ⊕ population variance over `[t-back, t+ahead]`
    /// clamped to the sequence.
    pub fn window_stats(&mut self, x: Value, back: usize, ahead: usize) -> Value {
        let t = self.value(x);
        let (rows, cols) = (t.rows(), t.cols());
        let mut out = vec![0.0; rows * 2 * cols];
        for r in 0..rows {
            let (lo, hi) = window(r, back, ahead, rows);
            let n = (hi - lo + 1) as f64;
            for c in 0..cols {
                let mut mean = 0.0;
                for s in lo..=hi {
                    mean += t.data()[s * cols + c];
                }
                mean /= n;
                let mut var = 0.0;
                for s in lo..=hi {
                    let d = t.data()[s * cols + c] - mean;
                    var += d * d;
                }
                out[r * 2 * cols + c] = mean;
                out[r * 2 * cols + cols + c] = var / n;
            }
        }
        self.push(
            Tensor::from_parts(vec![rows, 2 * cols], out),
            Op::WindowStats {
                input: x,
                back,
                ahead,
            },
            &[x],
        )
    }

    /// Per-column scaling to unit RMS over the rows (the batch of frames).
    pub fn rms_norm(&mut self, x: Value, eps: f64) -> Value {
        let t = self.value(x);
        let (rows, cols) = (t.rows(), t.cols());
        let mut inv_rms = vec![0.0; cols];
        for r in 0..rows {
            for (c, acc) in inv_rms.iter_mut().enumerate() {
                let v = t.data()[r * cols + c];
                *acc += v * v;
            }
        }
        for acc in &mut inv_rms {
            *acc = 1.0 / (*acc / rows as f64 + eps).sqrt();
        }
        let mut out = t.clone();
        for row in out.data_mut().chunks_mut(cols) {
            for (o, s) in row.iter_mut().zip(&inv_rms) {
                *o *= s;
            }
        }
        self.push(out, Op::RmsNorm { input: x, inv_rms }, &[x])
    }

    /// Single-head scaled dot-product attention restricted to the clamped
    /// window `[t-back, t+ahead]`.
    pub fn window_attention(
        &mut self,
        q: Value,
        k: Value,
        v: Value,
        back: usize,
        ahead: usize,
    ) -> Result<Value> {
        let (tq, tk, tv) = (self.value(q), self.value(k), self.value(v));
        if tq.shape() != tk.shape() || tq.rows() != tv.rows() {
            return Err(shape_err("window_attention", tq.shape(), tk.shape()));
        }
        let (rows, dk, dv) = (tq.rows(), tq.cols(), tv.cols());
        let scale = 1.0 / (dk as f64).sqrt();
        let mut out = vec![0.0; rows * dv];
        let mut weights = Vec::with_capacity(rows);
        for t in 0..rows {
            let (lo, hi) = window(t, back, ahead, rows);
            let mut w: Vec<f64> = (lo..=hi)
                .map(|j| dot(tq.row(t), tk.row(j)) * scale)
                .collect();
            let lse = log_sum_exp(&w);
            w.iter_mut().for_each(|s| *s = (*s - lse).exp());
            let o = &mut out[t * dv..(t + 1) * dv];
            for (a, j) in w.iter().zip(lo..=hi) {
                for (oi, vi) in o.iter_mut().zip(tv.row(j)) {
                    *oi += a * vi;
                }
            }
            weights.push((lo, w));
        }
        let ctx = AttentionCtx {
            q,
            k,
            v,
            back,
            ahead,
            weights,
        };
        Ok(self.push(
            Tensor::from_parts(vec![rows, dv], out),
            Op::WindowAttention(Box::new(ctx)),
            &[q, k, v],
        ))
    }

    /// Attention weights of a node produced by [`Tape::window_attention`].
    pub fn attention_weights(&self, v: Value) -> Option<Vec<(usize, Vec<f64>)>> {
        match &self.nodes[v.0].op {
            Op::WindowAttention(ctx) => Some(ctx.weights.clone()),
            _ => None,
        }
    }

    /// A scalar computed off-tape with known partial derivatives w.r.t. `parents`.
    pub fn external_scalar(
        &mut self,
        value: f64,
        parents: Vec<Value>,
        grads: Vec<Tensor>,
    ) -> Result<Value> {
        for (p, g) in parents.iter().zip(&grads) {
            if self.shape(*p) != g.shape() {
                return Err(shape_err("external gradient", self.shape(*p), g.shape()));
            }
        }
        let ps = parents.clone();
        Ok(self.push(Tensor::scalar(value), Op::External { parents, grads }, &ps))
    }

    // ---- backward ----------------------------------------------------

    /// Accumulates d(loss)/d(node) into the gradient slot of every node that
    /// requires a gradient.
    pub fn backward(&mut self, loss: Value) -> Result<()> {
        let shape = self.shape(loss).to_vec();
        if !self.value(loss).is_scalar() {
            return Err(Error::NotScalar(shape));
        }
        let n = loss.0 + 1;
        let mut adj: Vec<Option<Tensor>> = (0..n).map(|_| None).collect();
        adj[loss.0] = Some(Tensor::full(&shape, 1.0));
        for i in (0..n).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            self.pullback(i, &g, &mut adj);
            match &mut self.nodes[i].grad {
                Some(acc) => acc.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn pullback(&self, i: usize, g: &Tensor, adj: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let mut send = |v: Value, t: Tensor| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut adj[v.0] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                let mut ga = vec![0.0; m * k];
                gemm(m, n, k, g.data(), false, tb.data(), true, &mut ga, 0.0);
                let mut gb = vec![0.0; k * n];
                gemm(k, m, n, ta.data(), true, g.data(), false, &mut gb, 0.0);
                send(*a, Tensor::from_parts(ta.shape().to_vec(), ga));
                send(*b, Tensor::from_parts(tb.shape().to_vec(), gb));
            }
            Op::MatMulT(a, b) => {
                // out = a·bᵀ: ga = g·b, gb = gᵀ·a
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                let mut ga = vec![0.0; m * k];
                gemm(m, n, k, g.data(), false, tb.data(), false, &mut ga, 0.0);
                let mut gb = vec![0.0; n * k];
                gemm(n, m, k, g.data(), true, ta.data(), false, &mut gb, 0.0);
                send(*a, Tensor::from_parts(ta.shape().to_vec(), ga));
                send(*b, Tensor::from_parts(tb.shape().to_vec(), gb));
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                send(*a, g.zip_map(self.value(*b), |x, y| x * y));
                send(*b, g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::Relu(a) => {
                send(
                    *a,
                    g.zip_map(self.value(*a), |x, inp| if inp > 0.0 { x } else { 0.0 }),
                );
            }
            Op::Log(a) => send(*a, g.zip_map(self.value(*a), |x, inp| x / inp)),
            Op::Exp(a) => send(*a, g.zip_map(&node.value, |x, out| x * out)),
            Op::Scale(a, c) => send(*a, g.map(|x| c * x)),
            Op::AddBias(x, b) => {
                let tb = self.value(*b);
                let c = tb.len();
                let mut gb = vec![0.0; c];
                for row in g.data().chunks(c) {
                    for (acc, v) in gb.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                send(*x, g.clone());
                send(*b, Tensor::from_parts(tb.shape().to_vec(), gb));
            }
            Op::Sum(a) => {
                send(*a, Tensor::full(self.shape(*a), g.item()));
            }
            Op::LogSoftmax(z) => {
                // gz = g - softmax * rowsum(g)
                let c = node.value.cols();
                let mut gz = g.clone();
                for (grow, yrow) in gz.data_mut().chunks_mut(c).zip(node.value.data().chunks(c)) {
                    let s: f64 = grow.iter().sum();
                    for (gv, y) in grow.iter_mut().zip(yrow) {
                        *gv -= y.exp() * s;
                    }
                }
                send(*z, gz);
            }
            Op::Concat { parts, axis } => {
                let mut offset = 0;
                for &p in parts {
                    let tp = self.value(p);
                    let (pr, pc) = (tp.rows(), tp.cols());
                    let gp = if *axis == 0 {
                        g.data()[offset * pc..(offset + pr) * pc].to_vec()
                    } else {
                        let gc = g.cols();
                        let mut d = Vec::with_capacity(pr * pc);
                        for r in 0..pr {
                            d.extend_from_slice(&g.data()[r * gc + offset..r * gc + offset + pc]);
                        }
                        d
                    };
                    offset += if *axis == 0 { pr } else { pc };
                    send(p, Tensor::from_parts(tp.shape().to_vec(), gp));
                }
            }
            Op::Gather { input, index } => {
                let mut gi = Tensor::zeros(self.shape(*input));
                let d = gi.data_mut();
                for (&src, gv) in index.iter().zip(g.data()) {
                    d[src] += gv;
                }
                send(*input, gi);
            }
            Op::WindowStats { input, back, ahead } => {
                send(*input, window_stats_pullback(self.value(*input), &node.value, g, *back, *ahead));
            }
            Op::RmsNorm { input, inv_rms } => {
                let x = self.value(*input);
                let (rows, cols) = (x.rows(), x.cols());
                let mut dot_gx = vec![0.0; cols];
                for r in 0..rows {
                    for (c, acc) in dot_gx.iter_mut().enumerate() {
                        *acc += g.data()[r * cols + c] * x.data()[r * cols + c];
                    }
                }
                let mut gx = vec![0.0; rows * cols];
                for r in 0..rows {
                    for c in 0..cols {
                        let s = inv_rms[c];
                        gx[r * cols + c] = g.data()[r * cols + c] * s
                            - x.data()[r * cols + c] * dot_gx[c] * s * s * s / rows as f64;
                    }
                }
                send(*input, Tensor::from_parts(x.shape().to_vec(), gx));
            }
            Op::WindowAttention(ctx) => {
                let (gq, gk, gv) = self.attention_pullback(ctx, g);
                send(ctx.q, gq);
                send(ctx.k, gk);
                send(ctx.v, gv);
            }
            Op::External { parents, grads } => {
                let s = g.item();
                for (&p, pg) in parents.iter().zip(grads) {
                    send(p, pg.map(|x| s * x));
                }
            }
        }
    }

    fn attention_pullback(&self, ctx: &AttentionCtx, g: &Tensor) -> (Tensor, Tensor, Tensor) {
        let (tq, tk, tv) = (self.value(ctx.q), self.value(ctx.k), self.value(ctx.v));
        let (dk, dv) = (tq.cols(), tv.cols());
        let scale = 1.0 / (dk as f64).sqrt();
        let mut gq = Tensor::zeros(tq.shape());
        let mut gk = Tensor::zeros(tk.shape());
        let mut gvv = Tensor::zeros(tv.shape());
        debug_assert!(ctx.back + ctx.ahead < usize::MAX);
        for (t, (lo, w)) in ctx.weights.iter().enumerate() {
            let gt = g.row(t);
            let da: Vec<f64> = (0..w.len()).map(|i| dot(gt, tv.row(lo + i))).collect();
            let mean: f64 = w.iter().zip(&da).map(|(a, d)| a * d).sum();
            for (i, (&a, &d)) in w.iter().zip(&da).enumerate() {
                let j = lo + i;
                let ds = a * (d - mean) * scale;
                for (x, &gv) in gvv.data_mut()[j * dv..(j + 1) * dv].iter_mut().zip(gt) {
                    *x += a * gv;
                }
                for c in 0..dk {
                    gq.data_mut()[t * dk + c] += ds * tk.data()[j * dk + c];
                    gk.data_mut()[j * dk + c] += ds * tq.data()[t * dk + c];
                }
            }
        }
        (gq, gk, gvv)
    }
}

fn window_stats_pullback(x: &Tensor, out: &Tensor, g: &Tensor, back: usize, ahead: usize) -> Tensor {
    let (rows, cols) = (x.rows(), x.cols());
    let mut gx = vec![0.0; rows * cols];
    // For frame s, contributing windows are t in [s-ahead, s+back].
    for t in 0..rows {
        let (lo, hi) = window(t, back, ahead, rows);
        let n = (hi - lo + 1) as f64;
        for c in 0..cols {
            let gm = g.data()[t * 2 * cols + c] / n;
            let gv = 2.0 * g.data()[t * 2 * cols + cols + c] / n;
            let mean = out.data()[t * 2 * cols + c];
            for s in lo..=hi {
                gx[s * cols + c] += gm + gv * (x.data()[s * cols + c] - mean);
            }
        }
    }
    Tensor::from_parts(x.shape().to_vec(), gx)
}

pub(crate) fn clamp_frame(t: isize, rows: usize) -> usize {
    t.clamp(0, rows as isize - 1) as usize
}

/// Inclusive clamped window `[t-back, t+ahead]`.
pub(crate) fn window(t: usize, back: usize, ahead: usize, rows: usize) -> (usize, usize) {
    (t.saturating_sub(back), (t + ahead).min(rows - 1))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stable `ln Σ exp(xᵢ)`; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

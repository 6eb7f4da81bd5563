//! Reverse-mode automatic differentiation over channel×time buffers.
//!
//! A [`Tape`] records tensor-level primitives (convolution, ReLU, pooling,
//! dense, softmax, cross-entropy) in execution order. Nodes are appended as
//! they are computed, so parents always precede children and one backward
//! sweep from a scalar node accumulates exact gradients for every recorded
//! node, including leaves holding inputs and parameters.
//!
//! The tape is a per-call value: forward passes that need gradients build a
//! fresh tape, sweep it once, and drop it. Tapes are never shared across
//! threads.

use crate::error::{Error, Result};
use crate::kernels;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv {
        x: usize,
        w: usize,
        b: usize,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
    },
    Relu {
        x: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    PadChannels {
        x: usize,
    },
    MeanPool {
        x: usize,
    },
    Affine {
        x: usize,
        w: usize,
        b: usize,
    },
    Softmax {
        x: usize,
    },
    Pick {
        x: usize,
        index: usize,
    },
    CrossEntropy {
        logits: usize,
        target: usize,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Conv { .. } => "conv1d_same",
            Op::Relu { .. } => "relu",
            Op::Add { .. } => "add",
            Op::PadChannels { .. } => "pad_channels",
            Op::MeanPool { .. } => "mean_pool",
            Op::Affine { .. } => "affine",
            Op::Softmax { .. } => "softmax",
            Op::Pick { .. } => "pick",
            Op::CrossEntropy { .. } => "cross_entropy",
        }
    }
}

/// Append-only record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    ops: Vec<Op>,
    /// (channels, time length) per node; vectors are (dim, 1), scalars (1, 1).
    shapes: Vec<(usize, usize)>,
    vals: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.vals[id.0]
    }

    /// Gradient of the last [`Tape::backward`] objective w.r.t. this node.
    pub fn grad(&self, id: NodeId) -> &[f64] {
        &self.grads[id.0]
    }

    /// Value of a scalar node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.vals[id.0].len(), 1);
        self.vals[id.0][0]
    }

    fn push(&mut self, op: Op, channels: usize, len: usize, value: Vec<f64>) -> NodeId {
        debug_assert_eq!(value.len(), channels * len);
        let id = self.ops.len();
        self.ops.push(op);
        self.shapes.push((channels, len));
        self.grads.push(vec![0.0; value.len()]);
        self.vals.push(value);
        NodeId(id)
    }

    /// Records an input or parameter leaf.
    pub fn leaf(&mut self, value: Vec<f64>, channels: usize, len: usize) -> NodeId {
        self.push(Op::Leaf, channels, len, value)
    }

    /// `same`-padded stride-1 convolution of `x` with weight `w` `[out_ch*in_ch*k]`
    /// and bias `b` `[out_ch]`.
    pub fn conv1d_same(&mut self, x: NodeId, w: NodeId, b: NodeId, out_ch: usize, kernel: usize) -> NodeId {
        let (in_ch, len) = self.shapes[x.0];
        let mut y = vec![0.0; out_ch * len];
        kernels::conv1d_same(
            &self.vals[x.0],
            in_ch,
            len,
            &self.vals[w.0],
            &self.vals[b.0],
            out_ch,
            kernel,
            &mut y,
        );
        self.push(
            Op::Conv { x: x.0, w: w.0, b: b.0, in_ch, out_ch, kernel },
            out_ch,
            len,
            y,
        )
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let (ch, len) = self.shapes[x.0];
        let mut y = vec![0.0; ch * len];
        kernels::relu(&self.vals[x.0], &mut y);
        self.push(Op::Relu { x: x.0 }, ch, len, y)
    }

    /// Elementwise sum of two same-shape nodes.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ch, len) = self.shapes[a.0];
        debug_assert_eq!(self.shapes[a.0], self.shapes[b.0]);
        let y: Vec<f64> = self.vals[a.0]
            .iter()
            .zip(&self.vals[b.0])
            .map(|(av, bv)| av + bv)
            .collect();
        self.push(Op::Add { a: a.0, b: b.0 }, ch, len, y)
    }

    /// Embeds `x` in the first channels of a wider zero tensor.
    pub fn pad_channels(&mut self, x: NodeId, out_ch: usize) -> NodeId {
        let (in_ch, len) = self.shapes[x.0];
        let mut y = vec![0.0; out_ch * len];
        kernels::pad_channels(&self.vals[x.0], in_ch, out_ch, len, &mut y);
        self.push(Op::PadChannels { x: x.0 }, out_ch, len, y)
    }

    /// Global average pooling over the time axis.
    pub fn mean_pool(&mut self, x: NodeId) -> NodeId {
        let (ch, len) = self.shapes[x.0];
        let mut y = vec![0.0; ch];
        kernels::mean_pool(&self.vals[x.0], ch, len, &mut y);
        self.push(Op::MeanPool { x: x.0 }, ch, 1, y)
    }

    /// Dense layer over a `(dim, 1)` node.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId, out_dim: usize) -> NodeId {
        let (in_dim, _) = self.shapes[x.0];
        let mut y = vec![0.0; out_dim];
        kernels::affine(
            &self.vals[x.0],
            &self.vals[w.0],
            &self.vals[b.0],
            out_dim,
            in_dim,
            &mut y,
        );
        self.push(Op::Affine { x: x.0, w: w.0, b: b.0 }, out_dim, 1, y)
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let (dim, _) = self.shapes[x.0];
        let mut p = vec![0.0; dim];
        kernels::softmax(&self.vals[x.0], &mut p);
        self.push(Op::Softmax { x: x.0 }, dim, 1, p)
    }

    /// Selects one element of a vector node as a scalar.
    pub fn pick(&mut self, x: NodeId, index: usize) -> NodeId {
        let y = vec![self.vals[x.0][index]];
        self.push(Op::Pick { x: x.0, index }, 1, 1, y)
    }

    /// Cross-entropy `logsumexp(logits) - logits[target]` as a scalar node.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> NodeId {
        let z = &self.vals[logits.0];
        let loss = kernels::log_sum_exp(z) - z[target];
        self.push(Op::CrossEntropy { logits: logits.0, target }, 1, 1, vec![loss])
    }

    /// Backward sweep from a scalar node; gradients of every node are then
    /// available via [`Tape::grad`]. Fails with the offending node location
    /// if a non-finite value appears.
    pub fn backward(&mut self, from: NodeId) -> Result<()> {
        if self.vals[from.0].len() != 1 {
            return Err(Error::InvalidInput(
                "backward objective must be a scalar node".into(),
            ));
        }
        for g in &mut self.grads {
            g.fill(0.0);
        }
        self.grads[from.0][0] = 1.0;

        for i in (0..=from.0).rev() {
            let gout = std::mem::take(&mut self.grads[i]);
            let op = self.ops[i].clone();
            let vals = &self.vals;
            let grads = &mut self.grads;
            match op {
                Op::Leaf => {}
                Op::Conv { x, w, b, in_ch, out_ch, kernel } => {
                    let (_, len) = self.shapes[x];
                    kernels::conv1d_same_grad_input(
                        &gout, &vals[w], in_ch, out_ch, kernel, len, &mut grads[x],
                    );
                    // weight and bias grads touch two different nodes; borrow separately
                    {
                        let gw = &mut grads[w];
                        let mut gb_tmp = vec![0.0; out_ch];
                        kernels::conv1d_same_grad_params(
                            &gout, &vals[x], in_ch, out_ch, kernel, len, gw, &mut gb_tmp,
                        );
                        let gb = &mut grads[b];
                        for (g, t) in gb.iter_mut().zip(&gb_tmp) {
                            *g += t;
                        }
                    }
                }
                Op::Relu { x } => {
                    kernels::relu_grad(&vals[i], &gout, &mut grads[x]);
                }
                Op::Add { a, b } => {
                    for (g, &go) in grads[a].iter_mut().zip(&gout) {
                        *g += go;
                    }
                    for (g, &go) in grads[b].iter_mut().zip(&gout) {
                        *g += go;
                    }
                }
                Op::PadChannels { x } => {
                    let n = vals[x].len();
                    for (g, &go) in grads[x].iter_mut().zip(&gout[..n]) {
                        *g += go;
                    }
                }
                Op::MeanPool { x } => {
                    let (ch, len) = self.shapes[x];
                    let gx = &mut grads[x];
                    for c in 0..ch {
                        let go = gout[c] / len as f64;
                        for g in &mut gx[c * len..(c + 1) * len] {
                            *g += go;
                        }
                    }
                }
                Op::Affine { x, w, b } => {
                    let in_dim = vals[x].len();
                    let out_dim = gout.len();
                    {
                        let gx = &mut grads[x];
                        for (m, &go) in gout.iter().enumerate() {
                            let row = &vals[w][m * in_dim..(m + 1) * in_dim];
                            for (g, &wv) in gx.iter_mut().zip(row) {
                                *g += go * wv;
                            }
                        }
                    }
                    {
                        let gw = &mut grads[w];
                        for (m, &go) in gout.iter().enumerate() {
                            let grow = &mut gw[m * in_dim..(m + 1) * in_dim];
                            for (g, &xv) in grow.iter_mut().zip(&vals[x]) {
                                *g += go * xv;
                            }
                        }
                    }
                    let gb = &mut grads[b];
                    for (g, &go) in gb.iter_mut().zip(&gout[..out_dim]) {
                        *g += go;
                    }
                }
                Op::Softmax { x } => {
                    // dL/dz_i = p_i * (g_i - sum_j g_j p_j)
                    let p = &vals[i];
                    let dot: f64 = gout.iter().zip(p).map(|(g, pv)| g * pv).sum();
                    for ((g, &pv), &go) in grads[x].iter_mut().zip(p).zip(&gout) {
                        *g += pv * (go - dot);
                    }
                }
                Op::Pick { x, index } => {
                    grads[x][index] += gout[0];
                }
                Op::CrossEntropy { logits, target } => {
                    let z = &vals[logits];
                    let mut p = vec![0.0; z.len()];
                    kernels::softmax(z, &mut p);
                    let gl = &mut grads[logits];
                    for (j, (g, pv)) in gl.iter_mut().zip(&p).enumerate() {
                        let delta = if j == target { 1.0 } else { 0.0 };
                        *g += gout[0] * (pv - delta);
                    }
                }
            }
            self.grads[i] = gout;
        }

        if let Some((node, op)) = self.find_non_finite() {
            return Err(Error::Numeric { node, op });
        }
        Ok(())
    }

    /// Locates the first node carrying a non-finite value or gradient.
    pub fn find_non_finite(&self) -> Option<(usize, &'static str)> {
        for (i, (v, g)) in self.vals.iter().zip(&self.grads).enumerate() {
            if v.iter().chain(g.iter()).any(|x| !x.is_finite()) {
                return Some((i, self.ops[i].name()));
            }
        }
        None
    }
}

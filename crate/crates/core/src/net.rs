//! Scaled-down residual 1-D convolutional classifier.
//!
//! Stack: stem convolution (kernel 7) → two residual blocks (conv k=5 →
//! ReLU → conv k=5, skip add, ReLU) at widths 16/32 → global average
//! pooling over time → dense layer to 2 logits. No batch normalization,
//! `same` zero padding, stride 1 throughout. Where a block widens its
//! channel count the skip path zero-pads channels, keeping the skip free
//! of parameters.
//!
//! Inference ([`Network::forward`]) runs tape-free; gradient queries build
//! a [`Tape`](crate::tape::Tape) over the same kernels, so both paths
//! produce bit-identical values.

use crate::error::{Error, Result};
use crate::floatfmt;
use crate::kernels;
use crate::seeds;
use crate::tape::{NodeId, Tape};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::path::Path;

/// Binary classification throughout.
pub const CLASSES: usize = 2;

/// Shape of the classifier; fixes the parameter count and layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_len: usize,
    pub stem_channels: usize,
    pub stem_kernel: usize,
    pub block_channels: Vec<usize>,
    pub block_kernel: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_len: 150,
            stem_channels: 16,
            stem_kernel: 7,
            block_channels: vec![16, 32],
            block_kernel: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConvParams {
    pub(crate) w: Range<usize>,
    pub(crate) b: Range<usize>,
    pub(crate) in_ch: usize,
    pub(crate) out_ch: usize,
    pub(crate) k: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub(crate) stem: ConvParams,
    pub(crate) blocks: Vec<(ConvParams, ConvParams)>,
    pub(crate) fc_w: Range<usize>,
    pub(crate) fc_b: Range<usize>,
    pub(crate) total: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 {
            return Err(Error::InvalidSpec("input_len must be positive".into()));
        }
        if self.stem_kernel % 2 == 0 || self.block_kernel % 2 == 0 {
            return Err(Error::InvalidSpec("kernels must be odd for same padding".into()));
        }
        if self.stem_channels == 0 || self.block_channels.iter().any(|&c| c == 0) {
            return Err(Error::InvalidSpec("channel widths must be positive".into()));
        }
        let mut prev = self.stem_channels;
        for &c in &self.block_channels {
            if c < prev {
                return Err(Error::InvalidSpec(
                    "blocks may keep or widen the channel count, not shrink it".into(),
                ));
            }
            prev = c;
        }
        Ok(())
    }

    pub(crate) fn layout(&self) -> Layout {
        let mut off = 0;
        let mut conv = |in_ch: usize, out_ch: usize, k: usize| {
            let w = off..off + out_ch * in_ch * k;
            off = w.end;
            let b = off..off + out_ch;
            off = b.end;
            ConvParams { w, b, in_ch, out_ch, k }
        };
        let stem = conv(1, self.stem_channels, self.stem_kernel);
        let mut blocks = Vec::with_capacity(self.block_channels.len());
        let mut prev = self.stem_channels;
        for &ch in &self.block_channels {
            let c1 = conv(prev, ch, self.block_kernel);
            let c2 = conv(ch, ch, self.block_kernel);
            blocks.push((c1, c2));
            prev = ch;
        }
        let last = prev;
        let fc_w = off..off + CLASSES * last;
        let fc_b = fc_w.end..fc_w.end + CLASSES;
        let total = fc_b.end;
        Layout { stem, blocks, fc_w, fc_b, total }
    }

    /// Total number of parameters.
    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Forward output on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionOutput {
    pub logits: [f64; CLASSES],
    pub probs: [f64; CLASSES],
    /// argmax of `probs`; ties break toward class 0.
    pub predicted_class: u8,
}

/// The classifier: an architecture descriptor plus a flat parameter vector.
///
/// A `Network` is immutable during inference and may be shared across
/// threads for forward and gradient calls; each gradient call owns a
/// private tape. Training mutates parameters through [`Network::theta_mut`]
/// from a single writer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    theta: Vec<f64>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    architecture: Architecture,
    seed: u64,
    #[serde(serialize_with = "floatfmt::ser_f64_slice")]
    theta: Vec<f64>,
}

struct TapeNet {
    tape: Tape,
    input: NodeId,
    params: Vec<(Range<usize>, NodeId)>,
    logits: NodeId,
}

impl Network {
    /// Training initialization: fan-in-scaled uniform convolution weights
    /// (He-style), zero biases, and a zero-initialized dense head so a fresh
    /// network predicts `[0.5, 0.5]`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let lay = arch.layout();
        let mut theta = vec![0.0; lay.total];
        let mut rng = seeds::rng_from(seed, "init", 0);
        let mut he = |cp: &ConvParams, theta: &mut [f64], rng: &mut rand_chacha::ChaCha8Rng| {
            let limit = (6.0 / (cp.in_ch * cp.k) as f64).sqrt();
            for v in &mut theta[cp.w.clone()] {
                *v = rng.gen_range(-limit..limit);
            }
        };
        he(&lay.stem, &mut theta, &mut rng);
        for (c1, c2) in &lay.blocks {
            he(c1, &mut theta, &mut rng);
            he(c2, &mut theta, &mut rng);
        }
        Ok(Self { arch, theta, seed })
    }

    /// Diagnostic initialization with every segment randomized, including
    /// the dense head. Used by gradient checks that need nonzero outputs.
    pub fn random(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::init(arch, seed)?;
        let lay = net.arch.layout();
        let mut rng = seeds::rng_from(seed, "random", 0);
        let lim_fc = (1.0 / lay.fc_w.len() as f64).sqrt() * 3.0;
        for r in [lay.stem.b.clone(), lay.fc_b.clone()] {
            for v in &mut net.theta[r] {
                *v = rng.gen_range(-0.1..0.1);
            }
        }
        for (c1, c2) in &lay.blocks {
            for r in [c1.b.clone(), c2.b.clone()] {
                for v in &mut net.theta[r] {
                    *v = rng.gen_range(-0.1..0.1);
                }
            }
        }
        for v in &mut net.theta[lay.fc_w.clone()] {
            *v = rng.gen_range(-lim_fc..lim_fc);
        }
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub(crate) fn layout_ref(&self) -> Layout {
        self.arch.layout()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_len {
            return Err(Error::Shape { expected: self.arch.input_len, got: x.len() });
        }
        Ok(())
    }

    fn conv_plain(&self, x: &[f64], len: usize, cp: &ConvParams) -> Vec<f64> {
        let mut y = vec![0.0; cp.out_ch * len];
        kernels::conv1d_same(
            x,
            cp.in_ch,
            len,
            &self.theta[cp.w.clone()],
            &self.theta[cp.b.clone()],
            cp.out_ch,
            cp.k,
            &mut y,
        );
        y
    }

    fn block_plain(&self, x: &[f64], len: usize, c1: &ConvParams, c2: &ConvParams) -> Vec<f64> {
        let mut h = self.conv_plain(x, len, c1);
        for v in &mut h {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mut out = self.conv_plain(&h, len, c2);
        // skip: identity on the carried channels, zero on any widened ones
        for (o, &xv) in out.iter_mut().zip(x) {
            *o += xv;
        }
        for v in &mut out {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        out
    }

    /// Deterministic class probabilities for one series.
    pub fn forward(&self, x: &[f64]) -> Result<PredictionOutput> {
        self.check_len(x)?;
        let lay = self.layout_ref();
        let len = self.arch.input_len;
        let mut cur = self.conv_plain(x, len, &lay.stem);
        for v in &mut cur {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for (c1, c2) in &lay.blocks {
            cur = self.block_plain(&cur, len, c1, c2);
        }
        let last_ch = lay.blocks.last().map_or(self.arch.stem_channels, |(_, c2)| c2.out_ch);
        let mut pooled = vec![0.0; last_ch];
        kernels::mean_pool(&cur, last_ch, len, &mut pooled);
        let mut logits = [0.0; CLASSES];
        kernels::affine(
            &pooled,
            &self.theta[lay.fc_w.clone()],
            &self.theta[lay.fc_b.clone()],
            CLASSES,
            last_ch,
            &mut logits,
        );
        let mut probs = [0.0; CLASSES];
        kernels::softmax(&logits, &mut probs);
        let predicted_class = u8::from(probs[1] > probs[0]);
        Ok(PredictionOutput { logits, probs, predicted_class })
    }

    fn build_tape(&self, x: &[f64]) -> Result<TapeNet> {
        self.check_len(x)?;
        let lay = self.layout_ref();
        let len = self.arch.input_len;
        let mut tape = Tape::new();
        let mut params = Vec::new();

        let input = tape.leaf(x.to_vec(), 1, len);
        let mut leaf = |tape: &mut Tape, params: &mut Vec<(Range<usize>, NodeId)>, r: &Range<usize>| {
            let id = tape.leaf(self.theta[r.clone()].to_vec(), 1, r.len());
            params.push((r.clone(), id));
            id
        };

        let sw = leaf(&mut tape, &mut params, &lay.stem.w);
        let sb = leaf(&mut tape, &mut params, &lay.stem.b);
        let stem = tape.conv1d_same(input, sw, sb, lay.stem.out_ch, lay.stem.k);
        let mut cur = tape.relu(stem);
        let mut cur_ch = lay.stem.out_ch;

        for (c1, c2) in &lay.blocks {
            let w1 = leaf(&mut tape, &mut params, &c1.w);
            let b1 = leaf(&mut tape, &mut params, &c1.b);
            let w2 = leaf(&mut tape, &mut params, &c2.w);
            let b2 = leaf(&mut tape, &mut params, &c2.b);
            let h = tape.conv1d_same(cur, w1, b1, c1.out_ch, c1.k);
            let h = tape.relu(h);
            let h = tape.conv1d_same(h, w2, b2, c2.out_ch, c2.k);
            let skip = if c2.out_ch == cur_ch { cur } else { tape.pad_channels(cur, c2.out_ch) };
            let sum = tape.add(h, skip);
            cur = tape.relu(sum);
            cur_ch = c2.out_ch;
        }

        let pooled = tape.mean_pool(cur);
        let fw = leaf(&mut tape, &mut params, &lay.fc_w);
        let fb = leaf(&mut tape, &mut params, &lay.fc_b);
        let logits = tape.affine(pooled, fw, fb, CLASSES);

        if tape.value(logits).iter().any(|v| !v.is_finite()) {
            let (node, op) = tape.find_non_finite().unwrap_or((0, "affine"));
            return Err(Error::Numeric { node, op });
        }
        Ok(TapeNet { tape, input, params, logits })
    }

    /// `∂ probs[target] / ∂x` via one reverse sweep.
    pub fn input_gradient(&self, x: &[f64], target: usize) -> Result<Vec<f64>> {
        self.class_index(target)?;
        let mut tn = self.build_tape(x)?;
        let p = tn.tape.softmax(tn.logits);
        let q = tn.tape.pick(p, target);
        tn.tape.backward(q)?;
        Ok(tn.tape.grad(tn.input).to_vec())
    }

    /// `∂ logits[target] / ∂x`; exposed so the probability-space choice made
    /// by the attribution methods stays testable against the alternative.
    pub fn input_gradient_logit(&self, x: &[f64], target: usize) -> Result<Vec<f64>> {
        self.class_index(target)?;
        let mut tn = self.build_tape(x)?;
        let q = tn.tape.pick(tn.logits, target);
        tn.tape.backward(q)?;
        Ok(tn.tape.grad(tn.input).to_vec())
    }

    /// Predicted-class probability and its input gradient in one pass.
    pub fn prob_and_input_gradient(&self, x: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
        self.class_index(target)?;
        let mut tn = self.build_tape(x)?;
        let p = tn.tape.softmax(tn.logits);
        let q = tn.tape.pick(p, target);
        let prob = tn.tape.scalar(q);
        tn.tape.backward(q)?;
        Ok((prob, tn.tape.grad(tn.input).to_vec()))
    }

    fn class_index(&self, target: usize) -> Result<()> {
        if target >= CLASSES {
            return Err(Error::InvalidInput(format!("class index {target} out of range")));
        }
        Ok(())
    }

    /// Mean cross-entropy over one sample and the flat parameter gradient.
    fn sample_loss_grad(&self, x: &[f64], y: u8) -> Result<(f64, bool, Vec<f64>)> {
        let mut tn = self.build_tape(x)?;
        let loss = tn.tape.cross_entropy(tn.logits, y as usize);
        let loss_val = tn.tape.scalar(loss);
        tn.tape.backward(loss)?;
        let mut grad = vec![0.0; self.theta.len()];
        for (range, id) in &tn.params {
            grad[range.clone()].copy_from_slice(tn.tape.grad(*id));
        }
        let logits = tn.tape.value(tn.logits);
        let pred = u8::from(logits[1] > logits[0]);
        Ok((loss_val, pred == y, grad))
    }

    /// Exact reverse-mode gradient of the mean cross-entropy over a batch.
    ///
    /// Per-sample sweeps fan out across workers; the reduction runs in
    /// sample order so the result is identical for any thread count.
    pub fn batch_grad(&self, batch: &[(&[f64], u8)]) -> Result<BatchStats> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("batch must be nonempty".into()));
        }
        let per: Vec<(f64, bool, Vec<f64>)> = batch
            .par_iter()
            .map(|(x, y)| self.sample_loss_grad(x, *y))
            .collect::<Result<_>>()?;
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.theta.len()];
        let mut loss = 0.0;
        let mut correct = 0;
        for (l, ok, g) in &per {
            loss += l;
            correct += usize::from(*ok);
            for (acc, gv) in grad.iter_mut().zip(g) {
                *acc += gv;
            }
        }
        for g in &mut grad {
            *g /= n;
        }
        Ok(BatchStats { mean_loss: loss / n, correct, grad })
    }

    /// Cross-entropy of one labeled series without gradients.
    pub fn cross_entropy(&self, x: &[f64], y: u8) -> Result<f64> {
        let out = self.forward(x)?;
        Ok(kernels::log_sum_exp(&out.logits) - out.logits[y as usize])
    }

    /// Writes the checkpoint: architecture descriptor, training seed and
    /// flat parameters at 17 significant digits.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            architecture: self.arch.clone(),
            seed: self.seed,
            theta: self.theta.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.architecture.validate()?;
        if file.theta.len() != file.architecture.param_count() {
            return Err(Error::InvalidInput(format!(
                "checkpoint has {} parameters, architecture expects {}",
                file.theta.len(),
                file.architecture.param_count()
            )));
        }
        Ok(Self { arch: file.architecture, theta: file.theta, seed: file.seed })
    }
}

/// Loss, accuracy count and mean parameter gradient for one batch.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean_loss: f64,
    pub correct: usize,
    pub grad: Vec<f64>,
}

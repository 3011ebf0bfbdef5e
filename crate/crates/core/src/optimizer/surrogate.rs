//! 1-D convolutional surrogate over the feature axis.
//!
//! `conv (ReLU) x L -> flatten -> dense (ReLU) -> scalar`. Convolutions use
//! zero "same" padding, so every layer keeps the feature length. All
//! parameters live in one flat vector so SGD, gradient checks and
//! checkpoints share a single view.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GDSM";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub features: usize,
    pub conv_layers: usize,
    pub filters: usize,
    pub kernel: usize,
    pub hidden: usize,
}

impl Architecture {
    pub fn new(features: usize) -> Self {
        Self {
            features,
            conv_layers: 2,
            filters: 8,
            kernel: 3,
            hidden: 32,
        }
    }

    /// Dense-only variant: the input feeds the hidden layer directly.
    pub fn without_conv(features: usize) -> Self {
        Self {
            conv_layers: 0,
            ..Self::new(features)
        }
    }

    fn channels_in(&self, layer: usize) -> usize {
        if layer == 0 {
            1
        } else {
            self.filters
        }
    }

    fn flat_len(&self) -> usize {
        if self.conv_layers == 0 {
            self.features
        } else {
            self.filters * self.features
        }
    }

    fn layout(&self) -> Layout {
        let mut off = 0;
        let mut conv = Vec::with_capacity(self.conv_layers);
        for l in 0..self.conv_layers {
            let w = off;
            off += self.filters * self.channels_in(l) * self.kernel;
            let b = off;
            off += self.filters;
            conv.push((w, b));
        }
        let fc_w = off;
        off += self.hidden * self.flat_len();
        let fc_b = off;
        off += self.hidden;
        let out_w = off;
        off += self.hidden;
        let out_b = off;
        off += 1;
        Layout {
            conv,
            fc_w,
            fc_b,
            out_w,
            out_b,
            len: off,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().len
    }

    fn validate(&self) -> Result<()> {
        if self.features == 0 || self.hidden == 0 {
            return Err(Error::InvalidParameter(
                "surrogate needs features and hidden units".into(),
            ));
        }
        if self.conv_layers > 0 && (self.filters == 0 || self.kernel == 0 || self.kernel % 2 == 0) {
            return Err(Error::InvalidParameter(
                "convolution kernel must be odd and filters non-zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Layout {
    conv: Vec<(usize, usize)>,
    fc_w: usize,
    fc_b: usize,
    out_w: usize,
    out_b: usize,
    len: usize,
}

/// Per-feature affine map `(x - shift) / scale`, plus the same for the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub target_shift: f64,
    pub target_scale: f64,
}

impl Normalization {
    pub fn identity(features: usize) -> Self {
        Self {
            shift: vec![0.0; features],
            scale: vec![1.0; features],
            target_shift: 0.0,
            target_scale: 1.0,
        }
    }

    /// Min-max to `[-1, 1]` on features, mean/std on the target. Constant
    /// columns get unit scale.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64]) -> Self {
        let f = inputs.first().map_or(0, Vec::len);
        let mut shift = vec![0.0; f];
        let mut scale = vec![1.0; f];
        for j in 0..f {
            let lo = inputs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min);
            let hi = inputs.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max);
            shift[j] = 0.5 * (lo + hi);
            if hi > lo {
                scale[j] = 0.5 * (hi - lo);
            }
        }
        let n = targets.len().max(1) as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        Self {
            shift,
            scale,
            target_shift: mean,
            target_scale: if var > 0.0 { var.sqrt() } else { 1.0 },
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, c))| (v - s) / c)
            .collect()
    }

    pub fn target(&self, y: f64) -> f64 {
        (y - self.target_shift) / self.target_scale
    }

    pub fn untarget(&self, y: f64) -> f64 {
        y * self.target_scale + self.target_shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub norm: Normalization,
}

/// Activations kept for the backward pass.
struct Tape {
    /// Input of each conv layer, then the flattened dense input.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of each conv layer.
    pre: Vec<Vec<f64>>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    out: f64,
}

/// Parameter update applied after each mini-batch gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Update {
    Sgd { momentum: f64 },
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Initial step; decays linearly to zero over the run.
    pub learning_rate: f64,
    pub batch: usize,
    pub seed: u64,
    pub update: Update,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 1e-2,
            batch: 16,
            seed: 0,
            update: Update::Adam,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonHeader {
    version: u32,
    arch: Architecture,
    norm: Normalization,
    params: usize,
}

impl SurrogateModel {
    /// He-uniform hidden weights; zero output weights and biases.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let lay = arch.layout();
        let mut params = vec![0.0; lay.len];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |params: &mut [f64], fan_in: usize| {
            let lim = (6.0 / fan_in.max(1) as f64).sqrt();
            for p in params {
                *p = rng.gen_range(-lim..lim);
            }
        };
        for (l, &(w, b)) in lay.conv.iter().enumerate() {
            fill(&mut params[w..b], arch.channels_in(l) * arch.kernel);
        }
        fill(&mut params[lay.fc_w..lay.fc_b], arch.flat_len());
        fill(&mut params[lay.out_w..lay.out_b], arch.hidden);
        Ok(Self {
            arch,
            params,
            norm: Normalization::identity(arch.features),
        })
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch,
            params: vec![0.0; arch.parameter_count()],
            norm: Normalization::identity(arch.features),
        })
    }

    pub fn output_bias(&self) -> f64 {
        self.params[self.arch.layout().out_b]
    }

    pub fn set_output_bias(&mut self, b: f64) {
        let i = self.arch.layout().out_b;
        self.params[i] = b;
    }

    fn run(&self, x: &[f64]) -> Tape {
        let a = &self.arch;
        let lay = a.layout();
        let f = a.features;
        let half = (a.kernel / 2) as isize;
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(a.conv_layers);
        for (l, &(w, b)) in lay.conv.iter().enumerate() {
            let cin = a.channels_in(l);
            let input = acts.last().expect("input present");
            let mut z = vec![0.0; a.filters * f];
            for o in 0..a.filters {
                for j in 0..f {
                    let mut s = self.params[b + o];
                    for c in 0..cin {
                        let wk = w + (o * cin + c) * a.kernel;
                        for t in 0..a.kernel {
                            let src = j as isize + t as isize - half;
                            if src >= 0 && (src as usize) < f {
                                s += self.params[wk + t] * input[c * f + src as usize];
                            }
                        }
                    }
                    z[o * f + j] = s;
                }
            }
            acts.push(z.iter().map(|v| v.max(0.0)).collect());
            pre.push(z);
        }
        let flat = acts.last().expect("flat present");
        let nf = a.flat_len();
        let hidden_pre: Vec<f64> = (0..a.hidden)
            .map(|h| {
                let row = &self.params[lay.fc_w + h * nf..lay.fc_w + (h + 1) * nf];
                self.params[lay.fc_b + h] + row.iter().zip(flat).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.max(0.0)).collect();
        let out = self.params[lay.out_b]
            + hidden
                .iter()
                .zip(&self.params[lay.out_w..lay.out_b])
                .map(|(h, w)| h * w)
                .sum::<f64>();
        Tape {
            acts,
            pre,
            hidden_pre,
            hidden,
            out,
        }
    }

    /// Network output for an already-normalized input.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.run(x).out
    }

    /// Raw features in, target units out.
    pub fn predict(&self, raw: &[f64]) -> f64 {
        self.norm.untarget(self.forward(&self.norm.apply(raw)))
    }

    /// Adds `scale * d out / d params` at `x` into `grad`.
    fn backward(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let a = &self.arch;
        let lay = a.layout();
        let f = a.features;
        let half = (a.kernel / 2) as isize;
        let tape = self.run(x);
        let nf = a.flat_len();
        grad[lay.out_b] += scale;
        let mut d_flat = vec![0.0; nf];
        for h in 0..a.hidden {
            grad[lay.out_w + h] += scale * tape.hidden[h];
            if tape.hidden_pre[h] <= 0.0 {
                continue;
            }
            let dh = scale * self.params[lay.out_w + h];
            grad[lay.fc_b + h] += dh;
            let flat = tape.acts.last().expect("flat present");
            for i in 0..nf {
                grad[lay.fc_w + h * nf + i] += dh * flat[i];
                d_flat[i] += dh * self.params[lay.fc_w + h * nf + i];
            }
        }
        let mut d_act = d_flat;
        for l in (0..a.conv_layers).rev() {
            let (w, b) = lay.conv[l];
            let cin = a.channels_in(l);
            let input = &tape.acts[l];
            let z = &tape.pre[l];
            let mut d_in = vec![0.0; cin * f];
            for o in 0..a.filters {
                for j in 0..f {
                    if z[o * f + j] <= 0.0 {
                        continue;
                    }
                    let dz = d_act[o * f + j];
                    grad[b + o] += dz;
                    for c in 0..cin {
                        let wk = w + (o * cin + c) * a.kernel;
                        for t in 0..a.kernel {
                            let src = j as isize + t as isize - half;
                            if src >= 0 && (src as usize) < f {
                                grad[wk + t] += dz * input[c * f + src as usize];
                                d_in[c * f + src as usize] += dz * self.params[wk + t];
                            }
                        }
                    }
                }
            }
            d_act = d_in;
        }
        tape.out
    }

    /// Mean squared error over normalized inputs and targets.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        if inputs.is_empty() {
            return 0.0;
        }
        inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| (self.forward(x) - t).powi(2))
            .sum::<f64>()
            / inputs.len() as f64
    }

    /// Gradient of the MSE with respect to every parameter.
    pub fn mse_gradient(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let n = inputs.len().max(1) as f64;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.forward(x);
            self.backward(x, 2.0 * (y - t) / n, &mut grad);
        }
        grad
    }

    /// Mini-batch SGD on normalized data. Returns the full-data loss after
    /// each epoch.
    pub fn train(&mut self, inputs: &[Vec<f64>], targets: &[f64], config: &TrainConfig) -> Result<Vec<f64>> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::InvalidParameter("training data empty or ragged".into()));
        }
        if inputs.iter().any(|x| x.len() != self.arch.features) {
            return Err(Error::InvalidParameter(
                "feature length does not match the model".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let batch = config.batch.max(1);
        let mut history = Vec::with_capacity(config.epochs);
        let mut grad = vec![0.0; self.params.len()];
        let mut m1 = vec![0.0; self.params.len()];
        let mut m2 = vec![0.0; self.params.len()];
        let (b1, b2) = (0.9f64, 0.999f64);
        let mut step = 0i32;
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let n = chunk.len() as f64;
                for &i in chunk {
                    let y = self.forward(&inputs[i]);
                    self.backward(&inputs[i], 2.0 * (y - targets[i]) / n, &mut grad);
                }
                let lr = config.learning_rate * (1.0 - epoch as f64 / config.epochs as f64);
                match config.update {
                    Update::Sgd { momentum } => {
                        for (k, p) in self.params.iter_mut().enumerate() {
                            m1[k] = momentum * m1[k] + grad[k];
                            *p -= lr * m1[k];
                        }
                    }
                    Update::Adam => {
                        step += 1;
                        let c1 = 1.0 - b1.powi(step);
                        let c2 = 1.0 - b2.powi(step);
                        for (k, p) in self.params.iter_mut().enumerate() {
                            m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
                            m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
                            *p -= lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + 1e-8);
                        }
                    }
                }
            }
            let loss = self.mse(inputs, targets);
            if !loss.is_finite() || self.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::DivergedLoss(epoch));
            }
            history.push(loss);
        }
        Ok(history)
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&JsonHeader {
            version: CHECKPOINT_VERSION,
            arch: self.arch,
            norm: self.norm.clone(),
            params: self.params.len(),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::Io(format!("bad checkpoint: {m}"));
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        if &word != MAGIC {
            return Err(bad("magic"));
        }
        r.read_exact(&mut word)?;
        if u32::from_le_bytes(word) != CHECKPOINT_VERSION {
            return Err(bad("version"));
        }
        r.read_exact(&mut word)?;
        let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
        r.read_exact(&mut header)?;
        let h: JsonHeader = serde_json::from_slice(&header).map_err(|e| bad(&e.to_string()))?;
        h.arch.validate()?;
        if h.params != h.arch.parameter_count() || h.norm.shift.len() != h.arch.features {
            return Err(bad("shape metadata"));
        }
        let mut params = vec![0.0; h.params];
        let mut buf = [0u8; 8];
        for p in &mut params {
            r.read_exact(&mut buf)?;
            *p = f64::from_le_bytes(buf);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        Ok(Self {
            arch: h.arch,
            params,
            norm: h.norm,
        })
    }
}

//! Small dense networks with hand-written backpropagation and Adam.
//!
//! Hidden layers use `tanh`, the output layer is linear. Weights are stored
//! row-major as `outputs x inputs`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }
}

/// Parameters of a feed-forward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub layers: Vec<Layer>,
}

/// Per-layer outputs kept from a forward pass for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[k]` the output of layer `k - 1`.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty cache")
    }
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "an MLP needs input and output dimensions");
        Self {
            dims: dims.to_vec(),
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Identity,
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Orthogonal initialization with `hidden_gain` on hidden layers and
    /// `output_gain` on the last layer; biases start at zero.
    pub fn orthogonal<R: Rng>(dims: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut R) -> Self {
        let mut mlp = Self::zeros(dims);
        let last = mlp.layers.len() - 1;
        for (k, layer) in mlp.layers.iter_mut().enumerate() {
            let gain = if k == last { output_gain } else { hidden_gain };
            layer.weights = orthogonal_matrix(layer.outputs, layer.inputs, gain, rng);
        }
        mlp
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("validated dims")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.dims)
    }

    /// Shape and finiteness checks for parameters loaded from outside.
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::Checkpoint(format!("invalid layer dims {:?}", self.dims)));
        }
        if self.layers.len() != self.dims.len() - 1 {
            return Err(Error::Checkpoint("layer count does not match dims".into()));
        }
        for (layer, w) in self.layers.iter().zip(self.dims.windows(2)) {
            if layer.inputs != w[0]
                || layer.outputs != w[1]
                || w[0].checked_mul(w[1]) != Some(layer.weights.len())
                || layer.biases.len() != w[1]
            {
                return Err(Error::Checkpoint("layer shape does not match dims".into()));
            }
        }
        if self.params().any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(())
    }

    fn activate(&self, layer: usize, values: &mut [f64]) {
        let act = if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        };
        if act == Activation::Tanh {
            values.iter_mut().for_each(|v| *v = v.tanh());
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).activations.pop().expect("output")
    }

    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        assert_eq!(input.len(), self.input_dim(), "input length");
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(&activations[k], &mut out);
            self.activate(k, &mut out);
            activations.push(out);
        }
        ForwardCache { activations }
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64], grads: &mut Mlp) {
        let mut delta = d_output.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let out = &cache.activations[k + 1];
            let act = if k + 1 == self.layers.len() {
                self.output_activation
            } else {
                self.hidden_activation
            };
            if act == Activation::Tanh {
                for (d, a) in delta.iter_mut().zip(out) {
                    *d *= 1.0 - a * a;
                }
            }
            let input = &cache.activations[k];
            let g = &mut grads.layers[k];
            for (o, d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.params_mut().for_each(|p| *p *= factor);
    }

    pub fn squared_norm(&self) -> f64 {
        self.params().map(|p| p * p).sum()
    }
}

/// `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// shorter) scaled by `gain`.
fn orthogonal_matrix<R: Rng>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (short, long) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let value = if rows <= cols { basis[r][c] } else { basis[c][r] };
            out[r * cols + c] = gain * value;
        }
    }
    out
}

/// Separate policy and value networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl ActorCritic {
    pub fn new<R: Rng>(obs_dim: usize, action_bits: usize, hidden: &[usize], rng: &mut R) -> Self {
        let dims = |out: usize| {
            let mut d = vec![obs_dim];
            d.extend_from_slice(hidden);
            d.push(out);
            d
        };
        let actor = Mlp::orthogonal(&dims(action_bits), 1.0, 0.01, rng);
        let critic = Mlp::orthogonal(&dims(1), 1.0, 1.0, rng);
        Self { actor, critic }
    }

    /// Policy logits (one per action bit) and the state value.
    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, f64) {
        (self.actor.forward(input), self.critic.forward(input)[0])
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            actor: self.actor.zeros_like(),
            critic: self.critic.zeros_like(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.actor.validate()?;
        self.critic.validate()?;
        if self.actor.input_dim() != self.critic.input_dim() || self.critic.output_dim() != 1 {
            return Err(Error::Checkpoint("actor and critic shapes disagree".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Log-probability of `action` under independent Bernoulli bits with `logits`.
pub fn bernoulli_log_prob(logits: &[f64], action: &[bool]) -> f64 {
    logits
        .iter()
        .zip(action)
        .map(|(&z, &a)| if a { -softplus(-z) } else { -softplus(z) })
        .sum()
}

pub fn bernoulli_entropy(logits: &[f64]) -> f64 {
    logits
        .iter()
        .map(|&z| {
            let p = sigmoid(z);
            // H = softplus(z) - p z
            softplus(z) - p * z
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One bias-corrected Adam update of `params` against `grads`.
    pub fn step(&mut self, params: &mut Mlp, grads: &Mlp) {
        assert_eq!(self.m.len(), params.param_count(), "optimizer/parameter shape");
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .params_mut()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

//! Dense feed-forward engine.
//!
//! A [`Network`] is a chain of fully-connected [`DenseLayer`]s, each computing
//! `y = act(x W + b)`. Weights are stored row-major with shape
//! `(in_dim, out_dim)`, so `weights[i * out_dim + j]` connects input `i` to
//! output `j`.
//!
//! The loss used everywhere is the squared L2 distance between output and
//! target (no averaging over dimensions). Parameters are flattened layer by
//! layer, weights before biases, whenever a flat view is needed (optimizer
//! state, serialization, finite-difference checks).

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y = act(z)`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let layer = Self {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Result<Self> {
        Self::from_parts(
            in_dim,
            out_dim,
            vec![0.0; in_dim * out_dim],
            vec![0.0; out_dim],
            activation,
        )
    }

    /// Glorot/Xavier uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return config("layer dimensions must be positive");
        }
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit)
            .map_err(|e| Error::Internal(format!("glorot range: {e}")))?;
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Self::from_parts(in_dim, out_dim, weights, vec![0.0; out_dim], activation)
    }

    fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return config("layer dimensions must be positive");
        }
        if self.weights.len() != self.in_dim * self.out_dim {
            return config(format!(
                "weight buffer has {} entries, expected {}x{}",
                self.weights.len(),
                self.in_dim,
                self.out_dim
            ));
        }
        if self.biases.len() != self.out_dim {
            return config(format!(
                "bias buffer has {} entries, expected {}",
                self.biases.len(),
                self.out_dim
            ));
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.biases);
        for (x, row) in input.iter().zip(self.weights.chunks_exact(self.out_dim)) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        for o in out.iter_mut() {
            *o = self.activation.apply(*o);
        }
    }
}

/// Per-parameter gradients, shaped like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }
}

/// Reusable buffers for forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let net = Self { layers };
        net.validate()?;
        Ok(net)
    }

    /// Checks that every layer is well-formed and consecutive layers chain.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return config("network needs at least one layer");
        }
        for l in &self.layers {
            l.validate()?;
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return config(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].out_dim,
                    k + 1,
                    pair[1].in_dim
                ));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return config(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            ));
        }
        let mut rest = flat;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|p| p.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return config(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_dim()
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut scratch = Scratch::default();
        self.forward_scratch(input, &mut scratch);
        Ok(scratch.activations.pop().unwrap_or_default())
    }

    /// Forward pass that keeps every layer's output in `scratch`; returns the
    /// network output. Panics on dimension mismatch.
    pub fn forward_scratch<'s>(&self, input: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        assert_eq!(input.len(), self.input_dim(), "input dimension mismatch");
        let acts = &mut scratch.activations;
        acts.resize_with(self.layers.len() + 1, Vec::new);
        acts[0].clear();
        acts[0].extend_from_slice(input);
        for (k, layer) in self.layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(k + 1);
            let out = &mut tail[0];
            out.resize(layer.out_dim, 0.0);
            layer.forward_into(&head[k], out);
        }
        &acts[self.layers.len()]
    }

    /// Gradients of `mse_loss(forward(input), target)` w.r.t. every parameter.
    pub fn backward(&self, input: &[f64], target: &[f64]) -> Result<Gradients> {
        self.check_input(input)?;
        if target.len() != self.output_dim() {
            return config(format!(
                "target has {} values, network outputs {}",
                target.len(),
                self.output_dim()
            ));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = Scratch::default();
        self.accumulate_gradients(input, target, 1.0, &mut grads, &mut scratch);
        Ok(grads)
    }

    /// Adds `scale * dL/dθ` for one sample into `grads` and returns the
    /// sample's loss. Panics on dimension mismatch.
    pub fn accumulate_gradients(
        &self,
        input: &[f64],
        target: &[f64],
        scale: f64,
        grads: &mut Gradients,
        scratch: &mut Scratch,
    ) -> f64 {
        assert_eq!(target.len(), self.output_dim(), "target dimension mismatch");
        self.forward_scratch(input, scratch);
        let Scratch {
            activations,
            delta,
            delta_prev,
        } = scratch;

        let n_layers = self.layers.len();
        let output = &activations[n_layers];
        let last = &self.layers[n_layers - 1];
        delta.clear();
        let mut loss = 0.0;
        for (y, t) in output.iter().zip(target) {
            let diff = y - t;
            loss += diff * diff;
            delta.push(2.0 * diff * last.activation.derivative_from_output(*y));
        }

        for k in (0..n_layers).rev() {
            let layer = &self.layers[k];
            let g = &mut grads.layers[k];
            let x = &activations[k];
            for (i, xi) in x.iter().enumerate() {
                let row = &mut g.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                for (gw, d) in row.iter_mut().zip(delta.iter()) {
                    *gw += scale * xi * d;
                }
            }
            for (gb, d) in g.biases.iter_mut().zip(delta.iter()) {
                *gb += scale * d;
            }
            if k > 0 {
                let prev_act = self.layers[k - 1].activation;
                delta_prev.clear();
                for (i, xi) in x.iter().enumerate() {
                    let row = &layer.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                    let s: f64 = row.iter().zip(delta.iter()).map(|(w, d)| w * d).sum();
                    delta_prev.push(s * prev_act.derivative_from_output(*xi));
                }
                std::mem::swap(delta, delta_prev);
            }
        }
        loss
    }
}

/// Squared L2 distance between `output` and `target`.
pub fn mse_loss(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return config(format!(
            "length mismatch: {} vs {}",
            output.len(),
            target.len()
        ));
    }
    Ok(squared_distance(output, target))
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// Coupled L2 penalty: `grad += weight_decay * param` before the moment updates.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return config("learning rate must be positive and finite");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return config("weight decay must be non-negative and finite");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return config("Adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return config("Adam epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        Self {
            config,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One optimizer step over a flat parameter buffer.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return config(format!(
                "optimizer holds {} moments, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            ));
        }
        self.step_count += 1;
        let coeffs = self.coefficients();
        self.update_range(0, params, grads, coeffs);
        Ok(())
    }

    /// One optimizer step over every parameter of `net`.
    pub fn step_network(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if net.num_params() != self.first_moment.len() || grads.layers.len() != net.layers.len() {
            return config("optimizer state does not match the network");
        }
        self.step_count += 1;
        let coeffs = self.coefficients();
        let mut offset = 0;
        for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
            self.update_range(offset, &mut layer.weights, &g.weights, coeffs);
            offset += layer.weights.len();
            self.update_range(offset, &mut layer.biases, &g.biases, coeffs);
            offset += layer.biases.len();
        }
        Ok(())
    }

    fn coefficients(&self) -> (f64, f64) {
        let t = self.step_count as i32;
        let c = &self.config;
        (1.0 - c.beta1.powi(t), 1.0 - c.beta2.powi(t))
    }

    fn update_range(
        &mut self,
        offset: usize,
        params: &mut [f64],
        grads: &[f64],
        (bc1, bc2): (f64, f64),
    ) {
        let c = self.config;
        let m = &mut self.first_moment[offset..offset + params.len()];
        let v = &mut self.second_moment[offset..offset + params.len()];
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
            let g = g + c.weight_decay * *p;
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

/// Central finite-difference estimate of the loss gradient.
pub fn numerical_gradients(
    net: &Network,
    input: &[f64],
    target: &[f64],
    h: f64,
) -> Result<Gradients> {
    let loss_at = |params: &[f64]| -> Result<f64> {
        let mut probe = net.clone();
        probe.set_params(params)?;
        mse_loss(&probe.forward(input)?, target)
    };
    let base = net.params();
    let mut flat = Vec::with_capacity(base.len());
    let mut work = base.clone();
    for i in 0..base.len() {
        work[i] = base[i] + h;
        let plus = loss_at(&work)?;
        work[i] = base[i] - h;
        let minus = loss_at(&work)?;
        work[i] = base[i];
        flat.push((plus - minus) / (2.0 * h));
    }
    let mut grads = Gradients::zeros_like(net);
    let mut rest = flat.as_slice();
    for g in &mut grads.layers {
        let (w, tail) = rest.split_at(g.weights.len());
        let (b, tail) = tail.split_at(g.biases.len());
        g.weights.copy_from_slice(w);
        g.biases.copy_from_slice(b);
        rest = tail;
    }
    Ok(grads)
}

/// Largest relative disagreement between two gradient sets, with an absolute
/// floor so that near-zero entries compare by absolute error.
pub fn max_relative_error(a: &Gradients, b: &Gradients, abs_floor: f64) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat())
        .map(|(x, y)| {
            let diff = (x - y).abs();
            if diff <= abs_floor {
                0.0
            } else {
                diff / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

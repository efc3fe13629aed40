//! Symmetric shrinking autoencoders.
//!
//! The encoder halves the width at every layer (`floor(alpha * previous)`),
//! never going below `min_width`; the decoder mirrors it. Depth counts every
//! layer including input and output, so depth `l` yields `l - 1` weight layers
//! and a single bottleneck in the middle. The first hidden layer and the
//! output layer use a sigmoid, all others ReLU.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{config, input, Error, Result};
use crate::nn::{self, Activation, AdamConfig, AdamState, DenseLayer, Gradients, Network, Scratch};
use crate::rng;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_MIN_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    /// Total layer count, input and output included. Odd, at least 3.
    pub depth: usize,
    pub alpha: f64,
    pub min_width: usize,
}

impl ArchitectureSpec {
    pub fn new(input_dim: usize, depth: usize) -> Self {
        Self {
            input_dim,
            depth,
            alpha: DEFAULT_ALPHA,
            min_width: DEFAULT_MIN_WIDTH,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return config("input dimension must be positive");
        }
        if self.depth < 3 || self.depth % 2 == 0 {
            return config(format!("depth must be odd and >= 3, got {}", self.depth));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return config(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.min_width == 0 {
            return config("minimum layer width must be positive");
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Result<Vec<usize>> {
        layer_sizes(self)
    }
}

/// Layer widths from input to output. Hidden widths never drop below
/// `min_width`, so inputs narrower than that get a wider bottleneck
/// (`d0 = 2` gives `[2, 3, 2]`).
pub fn layer_sizes(spec: &ArchitectureSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let half = (spec.depth - 1) / 2;
    let mut encoder = Vec::with_capacity(half + 1);
    encoder.push(spec.input_dim);
    for h in 1..=half {
        let shrunk = (spec.alpha * encoder[h - 1] as f64).floor() as usize;
        encoder.push(shrunk.max(spec.min_width));
    }
    let mut sizes = encoder.clone();
    sizes.extend(encoder.iter().rev().skip(1));
    Ok(sizes)
}

/// Activation of each weight layer for a network with `n_layers` of them.
pub fn activations(n_layers: usize) -> Vec<Activation> {
    (0..n_layers)
        .map(|k| {
            if k == 0 || k + 1 == n_layers {
                Activation::Sigmoid
            } else {
                Activation::Relu
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Training stops once consecutive epoch-average losses differ by less.
    pub convergence_tol: f64,
    /// Upper bound on the mini-batch size; the effective size is `min(batch_size, n)`.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 50,
            convergence_tol: 1e-4,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return config("max_epochs must be at least 1");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return config("convergence tolerance must be positive");
        }
        if self.batch_size == 0 {
            return config("batch size must be positive");
        }
        self.adam.validate()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Early-stopping rule over a trace of epoch-average losses.
pub fn converged(trace: &[f64], tol: f64) -> bool {
    match trace {
        [.., prev, last] => (last - prev).abs() < tol,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample squared reconstruction error after each epoch.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

impl TrainReport {
    pub fn epochs(&self) -> usize {
        self.loss_trace.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_trace.last().copied()
    }
}

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    spec: ArchitectureSpec,
    network: Network,
}

impl AutoencoderModel {
    /// Glorot-initialized autoencoder; weights come from the `seed` stream.
    pub fn build(spec: ArchitectureSpec, seed: u64) -> Result<Self> {
        let sizes = layer_sizes(&spec)?;
        let acts = activations(sizes.len() - 1);
        let mut r = rng::stream(seed, INIT_STREAM);
        let layers = sizes
            .windows(2)
            .zip(acts)
            .map(|(w, a)| DenseLayer::glorot(w[0], w[1], a, &mut r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            network: Network::new(layers)?,
        })
    }

    /// Wraps an existing network. Its widths must match `spec`.
    pub fn from_network(spec: ArchitectureSpec, network: Network) -> Result<Self> {
        let sizes = layer_sizes(&spec)?;
        network.validate()?;
        let actual: Vec<usize> = std::iter::once(network.input_dim())
            .chain(network.layers().iter().map(DenseLayer::out_dim))
            .collect();
        if actual != sizes {
            return config(format!(
                "network widths {actual:?} do not match architecture {sizes:?}"
            ));
        }
        Ok(Self { spec, network })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.network
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.network.input_dim())
            .chain(self.network.layers().iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.network.forward(x)
    }

    fn check_data(&self, data: &DataMatrix) -> Result<()> {
        if data.n_cols() != self.spec.input_dim {
            return config(format!(
                "data has {} features, model expects {}",
                data.n_cols(),
                self.spec.input_dim
            ));
        }
        Ok(())
    }

    /// Squared L2 reconstruction error of every row.
    pub fn reconstruction_errors(&self, data: &DataMatrix) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let mut scratch = Scratch::default();
        Ok(data
            .rows()
            .map(|row| nn::squared_distance(self.network.forward_scratch(row, &mut scratch), row))
            .collect())
    }

    /// Mini-batch Adam on the squared reconstruction error.
    ///
    /// Batches are drawn from a fresh shuffle each epoch; the batch loss is
    /// the mean of per-sample losses. Stops early once two consecutive
    /// epoch-average losses differ by less than `convergence_tol`.
    pub fn train(&mut self, data: &DataMatrix, cfg: &TrainConfig) -> Result<TrainReport> {
        cfg.validate()?;
        self.check_data(data)?;
        if data.is_empty() {
            return input("cannot train on an empty dataset");
        }
        let n = data.n_rows();
        let batch = cfg.batch_size.min(n);
        let mut r = rng::stream(cfg.seed, SHUFFLE_STREAM);
        let mut adam = AdamState::new(cfg.adam, self.network.num_params());
        let mut grads = Gradients::zeros_like(&self.network);
        let mut scratch = Scratch::default();
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = Vec::with_capacity(cfg.max_epochs);

        for epoch in 0..cfg.max_epochs {
            order.shuffle(&mut r);
            for chunk in order.chunks(batch) {
                grads.fill_zero();
                let scale = 1.0 / chunk.len() as f64;
                for &i in chunk {
                    let x = data.row(i);
                    self.network
                        .accumulate_gradients(x, x, scale, &mut grads, &mut scratch);
                }
                adam.step_network(&mut self.network, &grads)?;
            }
            if !self.network.all_finite() {
                return Err(Error::Internal(format!(
                    "non-finite parameters after epoch {}",
                    epoch + 1
                )));
            }
            let errors = self.reconstruction_errors(data)?;
            trace.push(errors.iter().sum::<f64>() / n as f64);
            if converged(&trace, cfg.convergence_tol) {
                return Ok(TrainReport {
                    loss_trace: trace,
                    converged: true,
                });
            }
        }
        Ok(TrainReport {
            loss_trace: trace,
            converged: false,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            spec: self.spec,
            network: self.network.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return input(format!(
                "unsupported model file {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                file.format, file.version
            ));
        }
        Self::from_network(file.spec, file.network)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&s)
    }
}

const MODEL_FORMAT: &str = "bae-autoencoder";
const MODEL_VERSION: u32 = 1;

/// On-disk model layout: a JSON object with `format`, `version`, the
/// architecture `spec` and the `network` layers (dims, activation tag,
/// row-major weights, biases).
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    spec: ArchitectureSpec,
    network: Network,
}

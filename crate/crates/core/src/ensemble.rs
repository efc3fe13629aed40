//! The boosting loop.
//!
//! Iteration 0 trains an autoencoder on the full dataset `X0`. Every later
//! iteration `i` trains on a sample `X_i` drawn with replacement from `X0`,
//! where each row's probability is inversely proportional to its
//! reconstruction error under the previous autoencoder. Rows that are hard to
//! reconstruct (likely outliers) are therefore progressively dropped from the
//! training samples.
//!
//! The final score of a row is the weighted sum of its reconstruction errors
//! under components `1..m`. Component weights are inversely proportional to
//! the error each component accumulates over its own training sample.
//! Component 0 only seeds the first sampling distribution.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    ArchitectureSpec, AutoencoderModel, TrainConfig, TrainReport, DEFAULT_ALPHA,
};
use crate::data::DataMatrix;
use crate::error::{config, input, Error, Result};
use crate::rng;

/// Errors below this value are raised to it before inversion.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Tolerated excursion outside `[0, 1]` for input data.
pub const UNIT_RANGE_SLACK: f64 = 1e-9;

const SAMPLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    probabilities: Vec<f64>,
}

impl SamplingDistribution {
    /// Wraps explicit probabilities; they must be non-negative and sum to 1.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return input("sampling distribution over zero rows");
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return input("probabilities must be finite and non-negative");
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return input(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

fn normalized_inverses(values: &[f64]) -> Vec<f64> {
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v.max(ERROR_FLOOR)).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|x| x / total).collect()
}

/// `P(x) = (1 / e_x) / sum_y (1 / e_y)`, with errors floored at [`ERROR_FLOOR`].
pub fn sampling_distribution(errors: &[f64]) -> Result<SamplingDistribution> {
    if errors.is_empty() {
        return input("no reconstruction errors to build a distribution from");
    }
    if let Some(bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return input(format!(
            "reconstruction error {bad} is not finite and non-negative"
        ));
    }
    Ok(SamplingDistribution {
        probabilities: normalized_inverses(errors),
    })
}

/// Draws `n` row indices i.i.d. with replacement from `dist`.
pub fn resample<R: Rng + ?Sized>(
    dist: &SamplingDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let sampler = WeightedIndex::new(&dist.probabilities)
        .map_err(|e| Error::Input(format!("cannot sample from distribution: {e}")))?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

/// Weights of components `1..m` from their training-sample error sums.
pub fn consensus_weights(sample_error_sums: &[f64]) -> Result<Vec<f64>> {
    if sample_error_sums.is_empty() {
        return config("consensus needs at least one component after the first (m >= 2)");
    }
    if let Some(bad) = sample_error_sums
        .iter()
        .find(|e| !(e.is_finite() && **e >= 0.0))
    {
        return input(format!(
            "sample error sum {bad} is not finite and non-negative"
        ));
    }
    Ok(normalized_inverses(sample_error_sums))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Component {
    pub model: AutoencoderModel,
    /// Rows of `X0` this component was trained on, with multiplicity.
    pub sample_indices: Vec<usize>,
    /// Reconstruction error of every row of `X0`.
    pub errors: Vec<f64>,
    /// Sum of `errors` over `sample_indices`, duplicates counted per occurrence.
    pub sample_error_sum: f64,
    pub training: TrainReport,
}

#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub components: Vec<Component>,
    /// One weight per component, starting at component 1.
    pub weights: Vec<f64>,
}

impl EnsembleState {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let sums: Vec<f64> = components
            .iter()
            .skip(1)
            .map(|c| c.sample_error_sum)
            .collect();
        let weights = consensus_weights(&sums)?;
        Ok(Self {
            components,
            weights,
        })
    }

    pub fn ensemble_size(&self) -> usize {
        self.components.len()
    }

    /// Components that contribute to the consensus.
    pub fn scoring_components(&self) -> &[Component] {
        &self.components[1..]
    }
}

/// `score(x) = sum_{i >= 1} w_i * e_i(x)`.
pub fn consensus_scores(state: &EnsembleState) -> Result<ScoreVector> {
    let scoring = state.components.get(1..).unwrap_or_default();
    if scoring.is_empty() || scoring.len() != state.weights.len() {
        return Err(Error::Internal(format!(
            "{} weights for {} scoring components",
            state.weights.len(),
            scoring.len()
        )));
    }
    let n = scoring[0].errors.len();
    let mut scores = vec![0.0; n];
    for (c, w) in scoring.iter().zip(&state.weights) {
        if c.errors.len() != n {
            return Err(Error::Internal(format!(
                "error vectors of length {} and {n}",
                c.errors.len()
            )));
        }
        for (s, e) in scores.iter_mut().zip(&c.errors) {
            *s += w * e;
        }
    }
    Ok(ScoreVector(scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaeConfig {
    pub ensemble_size: usize,
    pub depth: usize,
    pub alpha: f64,
    /// `train.seed` is the master seed of the whole run.
    pub train: TrainConfig,
}

impl Default for BaeConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 20,
            depth: 3,
            alpha: DEFAULT_ALPHA,
            train: TrainConfig::default(),
        }
    }
}

impl BaeConfig {
    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub sample_indices: Vec<usize>,
    pub sample_error_sum: f64,
    pub epochs: usize,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BaeRun {
    pub config: BaeConfig,
    pub state: EnsembleState,
    pub scores: ScoreVector,
}

impl BaeRun {
    pub fn diagnostics(&self) -> Vec<IterationDiagnostics> {
        self.state
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| IterationDiagnostics {
                iteration: i,
                sample_indices: c.sample_indices.clone(),
                sample_error_sum: c.sample_error_sum,
                epochs: c.training.epochs(),
                final_loss: c.training.final_loss(),
            })
            .collect()
    }

    /// Mean over components `1..m` of the error summed over each training sample.
    pub fn mean_sample_error(&self) -> f64 {
        let s = self.state.scoring_components();
        s.iter().map(|c| c.sample_error_sum).sum::<f64>() / s.len() as f64
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.state.components[0].model.layer_sizes()
    }
}

pub(crate) fn check_training_data(x0: &DataMatrix) -> Result<()> {
    if x0.is_empty() {
        return input("dataset has no rows");
    }
    x0.check_unit_range(UNIT_RANGE_SLACK)
}

/// Trains one component on `sample` (rows of `x0`) and scores all of `x0`.
fn train_component(
    x0: &DataMatrix,
    spec: ArchitectureSpec,
    train: &TrainConfig,
    sample_indices: Vec<usize>,
) -> Result<Component> {
    let mut model = AutoencoderModel::build(spec, train.seed)?;
    let training = if sample_indices.len() == x0.n_rows()
        && sample_indices.iter().enumerate().all(|(i, j)| i == *j)
    {
        model.train(x0, train)?
    } else {
        model.train(&x0.select_rows(&sample_indices), train)?
    };
    let errors = model.reconstruction_errors(x0)?;
    let sample_error_sum = sample_indices.iter().map(|&j| errors[j]).sum();
    Ok(Component {
        model,
        sample_indices,
        errors,
        sample_error_sum,
        training,
    })
}

/// Runs the full boosting loop and the weighted consensus.
///
/// Iteration `i` draws every random number from the sub-stream
/// `derive_seed(master, i)`, so a longer ensemble reproduces the components
/// of a shorter one exactly.
pub fn run_bae(x0: &DataMatrix, cfg: &BaeConfig) -> Result<BaeRun> {
    if cfg.ensemble_size < 2 {
        return config(format!(
            "ensemble size must be at least 2, got {}",
            cfg.ensemble_size
        ));
    }
    check_training_data(x0)?;
    let spec = ArchitectureSpec::new(x0.n_cols(), cfg.depth).with_alpha(cfg.alpha);
    spec.validate()?;
    cfg.train.validate()?;

    let n = x0.n_rows();
    let mut components = Vec::with_capacity(cfg.ensemble_size);
    let mut sample: Vec<usize> = (0..n).collect();
    for i in 0..cfg.ensemble_size {
        let seed = rng::derive_seed(cfg.seed(), i as u64);
        let component = train_component(x0, spec, &cfg.train.with_seed(seed), sample)?;
        if i + 1 < cfg.ensemble_size {
            let dist = sampling_distribution(&component.errors)?;
            sample = resample(&dist, n, &mut rng::stream(seed, SAMPLE_STREAM))?;
        } else {
            sample = Vec::new();
        }
        components.push(component);
    }
    let state = EnsembleState::new(components)?;
    let scores = consensus_scores(&state)?;
    Ok(BaeRun {
        config: *cfg,
        state,
        scores,
    })
}

/// A single autoencoder trained on all of `x0`; scores are its errors.
pub fn run_single(
    x0: &DataMatrix,
    depth: usize,
    alpha: f64,
    train: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport, ScoreVector)> {
    check_training_data(x0)?;
    let spec = ArchitectureSpec::new(x0.n_cols(), depth).with_alpha(alpha);
    spec.validate()?;
    train.validate()?;
    let c = train_component(x0, spec, train, (0..x0.n_rows()).collect())?;
    Ok((c.model, c.training, ScoreVector(c.errors)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthScore {
    pub depth: usize,
    pub mean_sample_error: f64,
}

#[derive(Debug, Clone)]
pub struct DepthSelection {
    pub chosen_depth: usize,
    pub per_depth: Vec<DepthScore>,
    /// One run per candidate, in candidate order.
    pub runs: Vec<BaeRun>,
}

impl DepthSelection {
    pub fn chosen_run(&self) -> &BaeRun {
        self.runs
            .iter()
            .find(|r| r.config.depth == self.chosen_depth)
            .expect("chosen depth always has a run")
    }

    pub fn into_chosen_run(self) -> BaeRun {
        let depth = self.chosen_depth;
        self.runs
            .into_iter()
            .find(|r| r.config.depth == depth)
            .expect("chosen depth always has a run")
    }
}

/// Depth with the smallest mean sample error; ties go to the smaller depth.
pub fn argmin_depth(scores: &[DepthScore]) -> Result<usize> {
    scores
        .iter()
        .filter(|s| !s.mean_sample_error.is_nan())
        .min_by(|a, b| {
            a.mean_sample_error
                .total_cmp(&b.mean_sample_error)
                .then(a.depth.cmp(&b.depth))
        })
        .map(|s| s.depth)
        .ok_or_else(|| Error::Config("no depth candidates to choose from".into()))
}

/// Runs the ensemble once per candidate depth (same master seed) and keeps
/// the depth whose components reconstruct their training samples best.
pub fn select_depth(
    x0: &DataMatrix,
    cfg: &BaeConfig,
    candidates: &[usize],
) -> Result<DepthSelection> {
    if candidates.is_empty() {
        return config("depth candidate set is empty");
    }
    let mut depths = candidates.to_vec();
    depths.sort_unstable();
    depths.dedup();
    for &d in &depths {
        if d < 3 || d % 2 == 0 {
            return config(format!("depth candidates must be odd and >= 3, got {d}"));
        }
    }
    let runs = depths
        .iter()
        .map(|&d| run_bae(x0, &cfg.with_depth(d)))
        .collect::<Result<Vec<_>>>()?;
    let per_depth: Vec<DepthScore> = runs
        .iter()
        .map(|r| DepthScore {
            depth: r.config.depth,
            mean_sample_error: r.mean_sample_error(),
        })
        .collect();
    let chosen_depth = argmin_depth(&per_depth)?;
    Ok(DepthSelection {
        chosen_depth,
        per_depth,
        runs,
    })
}

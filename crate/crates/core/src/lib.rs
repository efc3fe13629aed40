//! Boosting-based autoencoder ensembles for unsupervised outlier detection.
//!
//! A sequence of small dense autoencoders is trained, each on a sample drawn
//! from the original data with probabilities inversely proportional to the
//! previous autoencoder's reconstruction errors. Later components therefore
//! see progressively fewer outliers. The outlier score of an instance is a
//! weighted sum of its reconstruction errors across components.
//!
//! - [`nn`]: dense layers, backpropagation, Adam, finite-difference checks.
//! - [`autoencoder`]: architecture sizing, training with early stopping,
//!   reconstruction errors, model files.
//! - [`ensemble`]: the boosting loop, consensus scoring and depth selection.
//! - [`metrics`]: average precision, Kendall's tau, ensemble diversity,
//!   outlier ratios.
//! - [`data`]: CSV ingestion, min-max scaling, synthetic benchmarks.
//!
//! ```
//! use bae_core::{data, ensemble, metrics, BaeConfig, TrainConfig};
//!
//! let ds = data::make_synthetic(200, 5, 2, 1).unwrap();
//! let cfg = BaeConfig {
//!     ensemble_size: 4,
//!     train: TrainConfig { max_epochs: 3, ..TrainConfig::default() },
//!     ..BaeConfig::default()
//! };
//! let run = ensemble::run_bae(&ds.matrix, &cfg).unwrap();
//! let ap = metrics::average_precision(run.scores.scores(), ds.labels.as_ref().unwrap()).unwrap();
//! assert!((0.0..=1.0).contains(&ap));
//! ```

pub mod autoencoder;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use autoencoder::{layer_sizes, ArchitectureSpec, AutoencoderModel, TrainConfig, TrainReport};
pub use data::{CsvOptions, DataMatrix, Dataset, LabelColumn};
pub use ensemble::{
    run_bae, run_single, select_depth, BaeConfig, BaeRun, DepthScore, DepthSelection,
    EnsembleState, IterationDiagnostics, ScoreVector,
};
pub use error::{Error, Result};
pub use metrics::{FiveNumberSummary, RankingList};
pub use nn::{Activation, AdamConfig};

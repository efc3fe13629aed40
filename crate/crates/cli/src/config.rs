use std::path::PathBuf;

use bae_core::{AdamConfig, BaeConfig, CsvOptions, LabelColumn, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

pub const DEFAULT_ENSEMBLE_SIZE: usize = 20;
pub const DEFAULT_DEPTHS: [usize; 4] = [3, 5, 7, 9];
pub const DEFAULT_BASELINE_DEPTH: usize = 9;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-4;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-5;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_OUT: &str = "bae-out";

/// Everything needed to reproduce a run. Embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub label_col: Option<String>,
    pub has_header: bool,
    pub delimiter: char,
    pub ensemble_size: usize,
    pub depths: Vec<usize>,
    pub alpha: f64,
    pub epochs: usize,
    pub convergence_tol: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(data: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            data: data.into(),
            label_col: None,
            has_header: true,
            delimiter: ',',
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            depths: DEFAULT_DEPTHS.to_vec(),
            alpha: DEFAULT_ALPHA,
            epochs: DEFAULT_EPOCHS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            runs: 1,
            seed: 0,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.ensemble_size < 2 {
            return usage(format!(
                "--ensemble-size must be at least 2 (the consensus skips the first component), got {}",
                self.ensemble_size
            ));
        }
        if self.depths.is_empty() {
            return usage("--depths needs at least one value");
        }
        if let Some(d) = self.depths.iter().find(|d| **d < 3 || *d % 2 == 0) {
            return usage(format!("depths must be odd and >= 3, got {d}"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage(format!("--alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.epochs == 0 {
            return usage("--epochs must be at least 1");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return usage("--convergence-tol must be positive");
        }
        if self.batch_size == 0 {
            return usage("--batch-size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return usage("--lr must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return usage("--weight-decay must be non-negative");
        }
        if self.runs == 0 {
            return usage("--runs must be at least 1");
        }
        if !self.delimiter.is_ascii() {
            return usage("--delimiter must be a single ASCII character");
        }
        Ok(())
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.has_header,
            delimiter: self.delimiter as u8,
            label_column: self.label_col.as_deref().map(LabelColumn::parse),
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.epochs,
            convergence_tol: self.convergence_tol,
            batch_size: self.batch_size,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                weight_decay: self.weight_decay,
                ..AdamConfig::default()
            },
            seed,
        }
    }

    pub fn bae_config(&self, seed: u64) -> BaeConfig {
        BaeConfig {
            ensemble_size: self.ensemble_size,
            depth: self.depths[0],
            alpha: self.alpha,
            train: self.train_config(seed),
        }
    }

    /// Seed of run `k`; adding runs never changes earlier ones.
    pub fn run_seed(&self, k: usize) -> u64 {
        bae_core::rng::derive_seed(self.seed, k as u64)
    }

    pub fn dataset_name(&self) -> String {
        self.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.data.display().to_string())
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::*;
use crate::error::{usage, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "bae",
    version,
    about = "Boosting-based autoencoder ensembles for outlier detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Depth sweep plus boosted ensemble, repeated over derived seeds.
    Run(RunArgs),
    /// A single autoencoder trained on the full dataset.
    BaselineSae(BaselineArgs),
    /// Writes a labeled synthetic benchmark CSV.
    Synth(SynthArgs),
    /// Merges reports into AUCPR, diversity and outlier-ratio tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input CSV; features are min-max scaled after loading.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by header name or zero-based index. Defaults to a
    /// column named `label` when present.
    #[arg(long)]
    pub label_col: Option<String>,
    /// The first CSV line is data, not a header.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_TOL)]
    pub convergence_tol: f64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long = "lr", default_value_t = DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = DEFAULT_WEIGHT_DECAY)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Master seed; run k uses a seed derived from it and k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: bae-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every trained autoencoder as JSON under `<out>/models`.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = DEFAULT_ENSEMBLE_SIZE)]
    pub ensemble_size: usize,
    /// Candidate depths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DEPTHS)]
    pub depths: Vec<usize>,
    /// Repeat the experiment embedded in an earlier report instead.
    #[arg(long, conflicts_with = "data")]
    pub from_report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = DEFAULT_BASELINE_DEPTH)]
    pub depth: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub inliers: usize,
    #[arg(long, default_value_t = 20)]
    pub outliers: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Report files, or run directories containing `report.json`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Directory for CSV and text renderings.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        let Some(data) = &self.data else {
            return usage("--data is required");
        };
        let mut c = RunConfig::new(data, self.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()));
        c.label_col = self.label_col.clone();
        c.has_header = !self.no_header;
        c.delimiter = self.delimiter;
        c.alpha = self.alpha;
        c.epochs = self.epochs;
        c.convergence_tol = self.convergence_tol;
        c.batch_size = self.batch_size;
        c.learning_rate = self.learning_rate;
        c.weight_decay = self.weight_decay;
        c.runs = self.runs;
        c.seed = self.seed;
        Ok(c)
    }
}

impl RunArgs {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        let mut c = self.common.to_config()?;
        c.ensemble_size = self.ensemble_size;
        c.depths = self.depths.clone();
        Ok(c)
    }
}

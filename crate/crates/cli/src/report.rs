//! Report schema and the merged tables produced by `bae report`.

use std::path::{Path, PathBuf};

use bae_core::{DepthScore, FiveNumberSummary};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io_err, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool_version: String,
    /// Seconds since the Unix epoch, or `SOURCE_DATE_EPOCH` when set.
    /// The only field allowed to differ between identical invocations.
    pub generated_at: u64,
    /// `BAE` or `SAE<depth>`.
    pub method: String,
    pub dataset: DatasetInfo,
    pub config: RunConfig,
    pub optimizer: OptimizerInfo,
    pub ranking_tie_break: String,
    pub depth_tie_break: String,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub path: PathBuf,
    pub n_rows: usize,
    pub n_cols: usize,
    pub label_column: Option<String>,
    pub n_outliers: Option<usize>,
    pub outlier_fraction: Option<f64>,
    pub normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerInfo {
    pub name: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// Weight decay is added to the gradient (L2), not decoupled as in AdamW.
    pub weight_decay_mode: String,
    pub batch_size: usize,
    pub loss: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub chosen_depth: usize,
    pub layer_sizes: Vec<usize>,
    /// Mean training-sample error per candidate depth; empty for baselines.
    pub depth_errors: Vec<DepthScore>,
    /// Consensus weights of components 1..m.
    pub weights: Vec<f64>,
    /// Error summed over each component's own training sample.
    pub sample_error_sums: Vec<f64>,
    pub epochs: Vec<usize>,
    pub scores_file: String,
    pub aucpr: Option<f64>,
    pub diversity: Option<f64>,
    /// Outlier fraction of the training sample of each iteration, first
    /// entry being the full dataset.
    pub outlier_ratios: Option<Vec<f64>>,
    pub component_aps: Option<Vec<f64>>,
    pub component_ap_summary: Option<FiveNumberSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub aucpr_mean: Option<f64>,
    /// Sample standard deviation; 0 for a single run.
    pub aucpr_std: Option<f64>,
    pub diversity_mean: Option<f64>,
    pub outlier_ratio_mean: Option<Vec<f64>>,
    pub component_ap_median_mean: Option<f64>,
    pub chosen_depths: Vec<usize>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sample_std(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (v.len() - 1) as f64).sqrt())
}

/// Collects `Some` values only when every run has one.
fn all_some<T: Copy>(runs: &[RunRecord], f: impl Fn(&RunRecord) -> Option<T>) -> Option<Vec<T>> {
    runs.iter().map(f).collect()
}

impl Aggregate {
    pub fn of(runs: &[RunRecord]) -> Self {
        let aucpr = all_some(runs, |r| r.aucpr);
        let diversity = all_some(runs, |r| r.diversity);
        let ratios: Option<Vec<&Vec<f64>>> =
            runs.iter().map(|r| r.outlier_ratios.as_ref()).collect();
        let outlier_ratio_mean = ratios.filter(|r| !r.is_empty()).map(|r| {
            let len = r.iter().map(|v| v.len()).min().unwrap_or(0);
            (0..len)
                .map(|i| r.iter().map(|v| v[i]).sum::<f64>() / r.len() as f64)
                .collect()
        });
        let medians = all_some(runs, |r| r.component_ap_summary.map(|s| s.median));
        Self {
            runs: runs.len(),
            aucpr_mean: aucpr.as_deref().and_then(mean),
            aucpr_std: aucpr.as_deref().and_then(sample_std),
            diversity_mean: diversity.as_deref().and_then(mean),
            outlier_ratio_mean,
            component_ap_median_mean: medians.as_deref().and_then(mean),
            chosen_depths: runs.iter().map(|r| r.chosen_depth).collect(),
        }
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|source| CliError::Json {
            path: PathBuf::from(REPORT_FILE),
            source,
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, self.to_json()?).map_err(io_err(&path))?;
        Ok(path)
    }

    /// Reads a report file, or `report.json` inside a directory. The schema
    /// version is checked before anything else is parsed.
    pub fn read(path: &Path) -> CliResult<Self> {
        let path = if path.is_dir() {
            path.join(REPORT_FILE)
        } else {
            path.to_owned()
        };
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let json_err = |source| CliError::Json {
            path: path.clone(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(CliError::Schema {
                path,
                found,
                expected: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(json_err)
    }
}

/// A rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: PathBuf::from("<table>"),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("table cells are valid UTF-8"))
    }

    /// First column left-aligned, the rest right-aligned.
    pub fn to_text(&self) -> String {
        let ncol = self.header.len();
        let mut width = vec![0; ncol];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if j == 0 {
                        format!("{c:<w$}", w = width[j])
                    } else {
                        format!("{c:>w$}", w = width[j])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// 0.9671 -> "96.7".
pub fn percent(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = vec![];
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_owned());
        }
    }
    out
}

/// Reports merged by (dataset, method): runs of repeated cells are pooled.
pub struct Merged {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    cells: Vec<(String, String, Vec<RunRecord>)>,
}

impl Merged {
    pub fn new(reports: &[ExperimentReport]) -> Self {
        let datasets = first_seen(reports.iter().map(|r| r.dataset.name.as_str()));
        let methods = first_seen(reports.iter().map(|r| r.method.as_str()));
        let mut cells: Vec<(String, String, Vec<RunRecord>)> = vec![];
        for r in reports {
            match cells
                .iter_mut()
                .find(|c| c.0 == r.dataset.name && c.1 == r.method)
            {
                Some(c) => c.2.extend(r.runs.iter().cloned()),
                None => cells.push((r.dataset.name.clone(), r.method.clone(), r.runs.clone())),
            }
        }
        Self {
            datasets,
            methods,
            cells,
        }
    }

    pub fn aggregate(&self, dataset: &str, method: &str) -> Option<Aggregate> {
        self.cells
            .iter()
            .find(|c| c.0 == dataset && c.1 == method)
            .map(|c| Aggregate::of(&c.2))
    }

    /// Datasets as rows, methods as columns, mean AUCPR in percent. With more
    /// than one dataset an `Average` row follows, taken over the datasets
    /// each method was run on.
    pub fn aucpr_table(&self) -> Table {
        let mut header = vec!["dataset".to_owned()];
        header.extend(self.methods.iter().cloned());
        let mut rows = vec![];
        let mut per_method: Vec<Vec<f64>> = vec![vec![]; self.methods.len()];
        for d in &self.datasets {
            let mut row = vec![d.clone()];
            for (j, m) in self.methods.iter().enumerate() {
                match self.aggregate(d, m).and_then(|a| a.aucpr_mean) {
                    Some(v) => {
                        per_method[j].push(v);
                        row.push(percent(v));
                    }
                    None => row.push("-".into()),
                }
            }
            rows.push(row);
        }
        if self.datasets.len() > 1 {
            let mut avg = vec!["Average".to_owned()];
            avg.extend(
                per_method
                    .iter()
                    .map(|v| mean(v).map(percent).unwrap_or_else(|| "-".into())),
            );
            rows.push(avg);
        }
        Table { header, rows }
    }

    /// Methods as rows, datasets as columns, mean diversity to three decimals.
    /// Methods without a diversity value (single autoencoders) are left out.
    pub fn diversity_table(&self) -> Table {
        let mut header = vec!["method".to_owned()];
        header.extend(self.datasets.iter().cloned());
        let mut rows = vec![];
        for m in &self.methods {
            let vals: Vec<Option<f64>> = self
                .datasets
                .iter()
                .map(|d| self.aggregate(d, m).and_then(|a| a.diversity_mean))
                .collect();
            if vals.iter().all(Option::is_none) {
                continue;
            }
            let mut row = vec![m.clone()];
            row.extend(
                vals.iter()
                    .map(|v| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())),
            );
            rows.push(row);
        }
        Table { header, rows }
    }

    /// Long format: one line per (dataset, method, iteration), iterations
    /// numbered from 1.
    pub fn outlier_ratio_series(&self) -> Table {
        let header = ["dataset", "method", "iteration", "outlier_ratio"]
            .map(String::from)
            .to_vec();
        let mut rows = vec![];
        for (d, m, runs) in &self.cells {
            if let Some(series) = Aggregate::of(runs).outlier_ratio_mean {
                for (i, v) in series.iter().enumerate() {
                    rows.push(vec![
                        d.clone(),
                        m.clone(),
                        (i + 1).to_string(),
                        v.to_string(),
                    ]);
                }
            }
        }
        Table { header, rows }
    }

    /// Per-component APs for box plots, components numbered from 2 (the
    /// first autoencoder never votes).
    pub fn component_ap_series(&self) -> Table {
        let header = ["dataset", "method", "run", "component", "ap"]
            .map(String::from)
            .to_vec();
        let mut rows = vec![];
        for (d, m, runs) in &self.cells {
            for r in runs {
                for (i, ap) in r.component_aps.iter().flatten().enumerate() {
                    rows.push(vec![
                        d.clone(),
                        m.clone(),
                        r.run.to_string(),
                        (i + 2).to_string(),
                        ap.to_string(),
                    ]);
                }
            }
        }
        Table { header, rows }
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bae_core::data::{self, Dataset};
use bae_core::ensemble::{argmin_depth, run_bae, run_single, BaeRun};
use bae_core::metrics::{self, FiveNumberSummary};
use bae_core::{AdamConfig, DepthScore, LabelColumn, ScoreVector};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{io_err, usage, CliError, CliResult};
use crate::report::{
    Aggregate, DatasetInfo, ExperimentReport, Merged, OptimizerInfo, RunRecord, Table,
    SCHEMA_VERSION,
};

/// Worker-pool size for independent runs and depths.
pub const WORKERS_ENV: &str = "BAE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bae,
    Sae { depth: usize },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Bae => "BAE".into(),
            Method::Sae { depth } => format!("SAE{depth}"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        if name == "BAE" {
            return Some(Method::Bae);
        }
        let depth = name.strip_prefix("SAE")?.parse().ok()?;
        Some(Method::Sae { depth })
    }
}

fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => {
                return usage(format!(
                    "{WORKERS_ENV} must be a positive integer, got {v:?}"
                ))
            }
        }
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Uses a header column called `label` when no label column was named.
fn effective_label_column(cfg: &RunConfig) -> CliResult<Option<String>> {
    if cfg.label_col.is_some() || !cfg.has_header {
        return Ok(cfg.label_col.clone());
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter as u8)
        .from_path(&cfg.data)?;
    let found = reader
        .headers()?
        .iter()
        .find(|h| h.trim().eq_ignore_ascii_case("label"))
        .map(|h| h.trim().to_owned());
    Ok(found)
}

/// Loads and min-max scales the dataset named by `cfg`.
pub fn load_dataset(cfg: &RunConfig) -> CliResult<(Dataset, DatasetInfo)> {
    if !cfg.data.is_file() {
        return usage(format!(
            "--data {} is not a readable file",
            cfg.data.display()
        ));
    }
    let label = effective_label_column(cfg)?;
    let mut opts = cfg.csv_options();
    opts.label_column = label.as_deref().map(LabelColumn::parse);
    let raw = data::load_csv(&cfg.data, &opts)?;
    if raw.n_rows() < 2 {
        return usage(format!("{} has fewer than two rows", cfg.data.display()));
    }
    let ds = data::normalize_min_max(&raw);
    let info = DatasetInfo {
        name: cfg.dataset_name(),
        path: cfg.data.clone(),
        n_rows: ds.n_rows(),
        n_cols: ds.n_cols(),
        label_column: label,
        n_outliers: ds.outlier_count(),
        outlier_fraction: ds.outlier_fraction(),
        normalization: "min-max per feature; constant features map to 0".into(),
    };
    Ok((ds, info))
}

fn optimizer_info(cfg: &RunConfig) -> OptimizerInfo {
    let d = AdamConfig::default();
    OptimizerInfo {
        name: "adam".into(),
        learning_rate: cfg.learning_rate,
        beta1: d.beta1,
        beta2: d.beta2,
        epsilon: d.epsilon,
        weight_decay: cfg.weight_decay,
        weight_decay_mode: "coupled_l2".into(),
        batch_size: cfg.batch_size,
        loss: "mean squared L2 reconstruction error per batch".into(),
    }
}

/// Output of one run before it is turned into a record.
struct RunOutcome {
    seed: u64,
    chosen_depth: usize,
    depth_errors: Vec<DepthScore>,
    scores: ScoreVector,
    bae: Option<BaeRun>,
    layer_sizes: Vec<usize>,
    sample_error_sums: Vec<f64>,
    epochs: Vec<usize>,
    models: Vec<bae_core::AutoencoderModel>,
}

fn run_all(
    x: &Dataset,
    cfg: &RunConfig,
    method: Method,
    save_models: bool,
) -> CliResult<Vec<RunOutcome>> {
    let pool = worker_pool()?;
    let seeds: Vec<u64> = (0..cfg.runs).map(|k| cfg.run_seed(k)).collect();
    match method {
        Method::Sae { depth } => pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let (model, report, scores) =
                        run_single(&x.matrix, depth, cfg.alpha, &cfg.train_config(seed))?;
                    Ok(RunOutcome {
                        seed,
                        chosen_depth: depth,
                        depth_errors: vec![],
                        sample_error_sums: vec![scores.0.iter().sum()],
                        epochs: vec![report.epochs()],
                        layer_sizes: model.layer_sizes(),
                        scores,
                        bae: None,
                        models: if save_models { vec![model] } else { vec![] },
                    })
                })
                .collect()
        }),
        Method::Bae => {
            let mut depths = cfg.depths.clone();
            depths.sort_unstable();
            depths.dedup();
            let jobs: Vec<(u64, usize)> = seeds
                .iter()
                .flat_map(|&s| depths.iter().map(move |&d| (s, d)))
                .collect();
            let runs: Vec<BaeRun> = pool.install(|| {
                jobs.par_iter()
                    .map(|&(seed, depth)| {
                        run_bae(&x.matrix, &cfg.bae_config(seed).with_depth(depth))
                    })
                    .collect::<bae_core::Result<_>>()
            })?;
            let mut out = vec![];
            let mut runs = runs.into_iter();
            for &seed in &seeds {
                let group: Vec<BaeRun> = runs.by_ref().take(depths.len()).collect();
                let depth_errors: Vec<DepthScore> = group
                    .iter()
                    .map(|r| DepthScore {
                        depth: r.config.depth,
                        mean_sample_error: r.mean_sample_error(),
                    })
                    .collect();
                let chosen_depth = argmin_depth(&depth_errors)?;
                let run = group
                    .into_iter()
                    .find(|r| r.config.depth == chosen_depth)
                    .expect("chosen depth was run");
                let comps = &run.state.components;
                out.push(RunOutcome {
                    seed,
                    chosen_depth,
                    depth_errors,
                    scores: run.scores.clone(),
                    layer_sizes: run.layer_sizes(),
                    sample_error_sums: comps.iter().map(|c| c.sample_error_sum).collect(),
                    epochs: comps.iter().map(|c| c.training.epochs()).collect(),
                    models: if save_models {
                        comps.iter().map(|c| c.model.clone()).collect()
                    } else {
                        vec![]
                    },
                    bae: Some(run),
                });
            }
            Ok(out)
        }
    }
}

fn record(k: usize, o: &RunOutcome, labels: Option<&[bool]>) -> CliResult<RunRecord> {
    let aucpr = labels
        .map(|l| metrics::average_precision(o.scores.scores(), l))
        .transpose()?;
    let (mut weights, mut diversity, mut outlier_ratios, mut component_aps) =
        (vec![], None, None, None);
    if let Some(run) = &o.bae {
        weights = run.state.weights.clone();
        diversity = Some(metrics::ensemble_diversity(&metrics::component_rankings(
            &run.state,
        ))?);
        if let Some(l) = labels {
            outlier_ratios = Some(
                run.state
                    .components
                    .iter()
                    .map(|c| metrics::outlier_ratio(&c.sample_indices, l))
                    .collect::<bae_core::Result<Vec<_>>>()?,
            );
            component_aps = Some(metrics::per_component_ap(&run.state, l)?);
        }
    }
    Ok(RunRecord {
        run: k,
        seed: o.seed,
        chosen_depth: o.chosen_depth,
        layer_sizes: o.layer_sizes.clone(),
        depth_errors: o.depth_errors.clone(),
        weights,
        sample_error_sums: o.sample_error_sums.clone(),
        epochs: o.epochs.clone(),
        scores_file: scores_file_name(k),
        aucpr,
        diversity,
        component_ap_summary: component_aps.as_deref().and_then(FiveNumberSummary::of),
        outlier_ratios,
        component_aps,
    })
}

pub fn scores_file_name(k: usize) -> String {
    format!("scores-run{k:03}.csv")
}

fn write_scores(path: &Path, scores: &ScoreVector, labels: Option<&[bool]>) -> CliResult<()> {
    let mut s = String::from(if labels.is_some() {
        "id,score,label\n"
    } else {
        "id,score\n"
    });
    for (i, v) in scores.scores().iter().enumerate() {
        match labels {
            Some(l) => writeln!(s, "{i},{v},{}", u8::from(l[i])),
            None => writeln!(s, "{i},{v}"),
        }
        .expect("writing to a String cannot fail");
    }
    std::fs::write(path, s).map_err(io_err(path))
}

/// Runs `method` on the dataset of `cfg` and writes score files and
/// `report.json` into `cfg.out`.
pub fn execute(cfg: &RunConfig, method: Method, save_models: bool) -> CliResult<ExperimentReport> {
    cfg.validate()?;
    let (ds, info) = load_dataset(cfg)?;
    let mut warnings = vec![];
    let labels = match ds.labels.as_deref() {
        None => {
            warnings.push(
                "dataset has no labels: AUCPR, outlier ratios and component APs are omitted"
                    .to_owned(),
            );
            None
        }
        Some(l) if l.iter().all(|x| *x) || !l.iter().any(|x| *x) => {
            warnings.push("labels contain a single class: AUCPR, outlier ratios and component APs are omitted".to_owned());
            None
        }
        Some(l) => Some(l),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let outcomes = run_all(&ds, cfg, method, save_models)?;
    let runs = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| record(k, o, labels))
        .collect::<CliResult<Vec<_>>>()?;

    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    for (k, o) in outcomes.iter().enumerate() {
        write_scores(&cfg.out.join(scores_file_name(k)), &o.scores, labels)?;
        if save_models {
            let dir = cfg.out.join("models").join(format!("run{k:03}"));
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for (i, m) in o.models.iter().enumerate() {
                m.save(dir.join(format!("component{i:02}.json")))?;
            }
        }
    }

    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        generated_at: timestamp(),
        method: method.name(),
        dataset: info,
        config: cfg.clone(),
        optimizer: optimizer_info(cfg),
        ranking_tie_break: "equal scores rank by ascending instance index".into(),
        depth_tie_break: "equal mean sample errors choose the smaller depth".into(),
        aggregate: Aggregate::of(&runs),
        runs,
        warnings,
    };
    report.write(&cfg.out)?;
    Ok(report)
}

pub fn cmd_run(cfg: &RunConfig, save_models: bool) -> CliResult<ExperimentReport> {
    execute(cfg, Method::Bae, save_models)
}

pub fn cmd_baseline_sae(
    cfg: &RunConfig,
    depth: usize,
    save_models: bool,
) -> CliResult<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.depths = vec![depth];
    execute(&cfg, Method::Sae { depth }, save_models)
}

/// Repeats the experiment embedded in a report, optionally elsewhere.
pub fn cmd_rerun(report: &Path, out: Option<PathBuf>) -> CliResult<ExperimentReport> {
    let old = ExperimentReport::read(report)?;
    let mut cfg = old.config.clone();
    if let Some(o) = out {
        cfg.out = o;
    }
    match Method::parse(&old.method) {
        Some(m) => execute(&cfg, m, false),
        None => usage(format!(
            "unknown method {:?} in {}",
            old.method,
            report.display()
        )),
    }
}

pub fn cmd_synth(
    inliers: usize,
    outliers: usize,
    dim: usize,
    seed: u64,
    out: &Path,
) -> CliResult<Dataset> {
    if outliers == 0 {
        return usage(
            "--outliers must be at least 1; detection metrics are undefined without outliers",
        );
    }
    if inliers == 0 {
        return usage("--inliers must be at least 1");
    }
    if dim == 0 {
        return usage("--dim must be at least 1");
    }
    let ds = data::make_synthetic(inliers, outliers, dim, seed)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    data::write_csv(&ds, out)?;
    Ok(ds)
}

/// Rendered outputs of `bae report`, keyed by file name.
pub struct ReportTables {
    pub aucpr: Table,
    pub diversity: Table,
    pub outlier_ratios: Table,
    pub component_aps: Table,
}

impl ReportTables {
    pub fn files(&self) -> CliResult<Vec<(&'static str, String)>> {
        Ok(vec![
            ("aucpr.csv", self.aucpr.to_csv()?),
            ("aucpr.txt", self.aucpr.to_text()),
            ("diversity.csv", self.diversity.to_csv()?),
            ("diversity.txt", self.diversity.to_text()),
            ("outlier_ratios.csv", self.outlier_ratios.to_csv()?),
            ("component_aps.csv", self.component_aps.to_csv()?),
        ])
    }
}

pub fn cmd_report(paths: &[PathBuf], out: Option<&Path>) -> CliResult<ReportTables> {
    if paths.is_empty() {
        return usage("report needs at least one report file or directory");
    }
    let reports = paths
        .iter()
        .map(|p| ExperimentReport::read(p))
        .collect::<CliResult<Vec<_>>>()?;
    let merged = Merged::new(&reports);
    let tables = ReportTables {
        aucpr: merged.aucpr_table(),
        diversity: merged.diversity_table(),
        outlier_ratios: merged.outlier_ratio_series(),
        component_aps: merged.component_ap_series(),
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, body) in tables.files()? {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(io_err(&p))?;
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::Bae,
            Method::Sae { depth: 9 },
            Method::Sae { depth: 3 },
        ] {
            assert_eq!(Method::parse(&m.name()), Some(m));
        }
        assert_eq!(Method::Sae { depth: 9 }.name(), "SAE9");
        assert_eq!(Method::parse("RandNet"), None);
    }

    #[test]
    fn scores_files_are_zero_padded() {
        assert_eq!(scores_file_name(7), "scores-run007.csv");
    }
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line
//! each and exits nonzero if any criterion fails.
//!
//! Set `BAE_LYMPHO_CSV` (and optionally `BAE_LYMPHO_LABEL`) to a Lympho-format
//! CSV to enable the small-dataset reproduction check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use bae_cli::RunConfig;
use bae_core::autoencoder::{
    layer_sizes, ArchitectureSpec, AutoencoderModel, TrainConfig, TrainReport,
};
use bae_core::data::{self, CsvOptions, Dataset, LabelColumn};
use bae_core::ensemble::{
    consensus_scores, consensus_weights, run_bae, run_single, sampling_distribution, select_depth,
    BaeConfig, BaeRun, Component, EnsembleState,
};
use bae_core::metrics::{self, average_precision, ensemble_diversity, kendall_tau, RankingList};
use bae_core::nn::{self, Activation, DenseLayer, Network};
use bae_core::rng;
use rand::Rng;

const SEEDS: u64 = 10;
const TOL: f64 = 1e-9;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: &[f64], want: &[f64], tol: f64) -> Result<(), String> {
    ensure(
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() <= tol),
        || format!("{name}: got {got:?}, want {want:?}"),
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn stub(errors: Vec<f64>, sample_error_sum: f64) -> Component {
    Component {
        model: AutoencoderModel::build(ArchitectureSpec::new(1, 3), 0).unwrap(),
        sample_indices: vec![],
        errors,
        sample_error_sum,
        training: TrainReport {
            loss_trace: vec![],
            converged: false,
        },
    }
}

/// Consensus of stubbed scoring components after a dummy first component.
fn consensus_of(errors: Vec<Vec<f64>>, sums: Vec<f64>) -> Vec<f64> {
    let n = errors[0].len();
    let mut comps = vec![stub(vec![9.0; n], 1.0)];
    comps.extend(errors.into_iter().zip(sums).map(|(e, s)| stub(e, s)));
    consensus_scores(&EnsembleState::new(comps).unwrap())
        .unwrap()
        .0
}

fn ranks(order: &[usize]) -> RankingList {
    RankingList::from_order(order.to_vec()).unwrap()
}

fn formula_oracles() -> Check {
    let dist = |e: &[f64]| sampling_distribution(e).unwrap().probabilities().to_vec();
    close("P([2,2,2,2])", &dist(&[2.0; 4]), &[0.25; 4], TOL)?;
    close("P([1,3])", &dist(&[1.0, 3.0]), &[0.75, 0.25], TOL)?;
    close(
        "P([0.5,1,2])",
        &dist(&[0.5, 1.0, 2.0]),
        &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0],
        TOL,
    )?;

    close(
        "w([5,5])",
        &consensus_weights(&[5.0, 5.0]).unwrap(),
        &[0.5, 0.5],
        TOL,
    )?;
    close(
        "w([2,4,8])",
        &consensus_weights(&[2.0, 4.0, 8.0]).unwrap(),
        &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0],
        TOL,
    )?;
    close("w([3])", &consensus_weights(&[3.0]).unwrap(), &[1.0], 0.0)?;

    close(
        "score single",
        &consensus_of(vec![vec![0.3, 0.7]], vec![2.0]),
        &[0.3, 0.7],
        TOL,
    )?;
    let avg = consensus_of(vec![vec![0.2, 0.1], vec![0.4, 0.1]], vec![1.0, 1.0]);
    close("score average", &avg[..1], &[0.3], TOL)?;
    close(
        "score zero",
        &consensus_of(vec![vec![0.0; 3]; 3], vec![1.0, 2.0, 3.0]),
        &[0.0; 3],
        0.0,
    )?;

    let sizes = |d, l| layer_sizes(&ArchitectureSpec::new(d, l)).unwrap();
    for (d, l, want) in [
        (8, 3, vec![8, 4, 8]),
        (10, 5, vec![10, 5, 3, 5, 10]),
        (4, 7, vec![4, 3, 3, 3, 3, 3, 4]),
        (18, 9, vec![18, 9, 4, 3, 3, 3, 4, 9, 18]),
    ] {
        ensure(sizes(d, l) == want, || {
            format!("layer_sizes({d}, {l}) = {:?}", sizes(d, l))
        })?;
    }

    let ap = |s: &[f64], l: &[bool]| average_precision(s, l).unwrap();
    ensure(ap(&[0.9, 0.5, 0.1], &[true, false, false]) == 1.0, || {
        "AP perfect".into()
    })?;
    close(
        "AP 5/6",
        &[ap(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false])],
        &[5.0 / 6.0],
        TOL,
    )?;
    close(
        "AP 1/3",
        &[ap(&[0.1, 0.5, 0.9], &[true, false, false])],
        &[1.0 / 3.0],
        TOL,
    )?;

    let a = ranks(&[0, 1, 2, 3]);
    ensure(kendall_tau(&a, &a).unwrap() == 1.0, || {
        "tau identical".into()
    })?;
    ensure(kendall_tau(&a, &a.reversed()).unwrap() == -1.0, || {
        "tau reversed".into()
    })?;
    close(
        "tau swap",
        &[kendall_tau(&a, &ranks(&[0, 2, 1, 3])).unwrap()],
        &[2.0 / 3.0],
        TOL,
    )?;

    ensure(
        ensemble_diversity(&[a.clone(), a.clone(), a.clone()]).unwrap() == 0.0,
        || "D identical".into(),
    )?;
    ensure(
        ensemble_diversity(&[a.clone(), a.reversed()]).unwrap() == 2.0,
        || "D reversed".into(),
    )?;
    let c = ranks(&[1, 0, 3, 2]);
    close(
        "D 4/9",
        &[ensemble_diversity(&[a.clone(), a, c]).unwrap()],
        &[4.0 / 9.0],
        TOL,
    )?;
    Ok("26 examples".into())
}

fn random_network(seed: u64, sizes: &[usize]) -> Network {
    let mut r = rng::stream(seed, 1);
    let n = sizes.len() - 1;
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let act = if k == 0 || k + 1 == n {
                Activation::Sigmoid
            } else {
                Activation::Relu
            };
            let mut l = DenseLayer::glorot(w[0], w[1], act, &mut r).unwrap();
            for b in l.biases_mut() {
                *b = r.random_range(-0.5..0.5);
            }
            l
        })
        .collect();
    Network::new(layers).unwrap()
}

fn gradient_check() -> Check {
    let mut shapes = rng::stream(2024, 0);
    let (mut worst, mut worst_abs) = (0.0f64, 0.0f64);
    for seed in 0..24u64 {
        let depth = shapes.random_range(1..=5);
        let sizes: Vec<usize> = (0..=depth).map(|_| shapes.random_range(1..=16)).collect();
        let net = random_network(seed, &sizes);
        let x: Vec<f64> = (0..sizes[0]).map(|_| shapes.random()).collect();
        let t: Vec<f64> = (0..sizes[depth]).map(|_| shapes.random()).collect();
        let analytic = net.backward(&x, &t).unwrap();
        let numeric = nn::numerical_gradients(&net, &x, &t, 1e-5).unwrap();
        let err = nn::max_relative_error(&analytic, &numeric, 1e-7);
        ensure(err < 1e-4, || {
            format!("network {seed} {sizes:?}: relative error {err:e}")
        })?;
        worst = worst.max(err);
        for (a, n) in analytic.to_flat().iter().zip(numeric.to_flat()) {
            worst_abs = worst_abs.max((a - n).abs());
        }
    }
    Ok(format!(
        "24 networks, worst relative error {worst:.1e}, worst absolute difference {worst_abs:.1e}"
    ))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/wine_outliers.csv")
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let invoke = |name: &str| -> Result<PathBuf, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_bae"))
            .args(["run", "--runs", "2", "--seed", "7", "--data"])
            .arg(fixture())
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        Ok(out)
    };
    let (a, b) = (invoke("a")?, invoke("b")?);
    for k in 0..2 {
        let f = bae_cli::commands::scores_file_name(k);
        let (x, y) = (std::fs::read(a.join(&f)), std::fs::read(b.join(&f)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || {
            format!("{f} differs")
        })?;
    }
    let strip = |dir: &Path| {
        std::fs::read_to_string(dir.join("report.json"))
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"generated_at\"") && !l.contains("\"out\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    ensure(strip(&a) == strip(&b), || {
        "reports differ beyond timestamp and output path".into()
    })?;
    Ok("2 runs, score files byte-identical".into())
}

/// The synthetic benchmark of one seed: BAE at depth 3 and the matching
/// single autoencoder.
struct SynthSeed {
    labels: Vec<bool>,
    bae: BaeRun,
    single_ap: f64,
}

fn synthetic_benchmark() -> Vec<SynthSeed> {
    (0..SEEDS)
        .map(|s| {
            let ds = data::make_synthetic(1000, 20, 2, s).unwrap();
            let labels = ds.labels.clone().unwrap();
            let cfg = BaeConfig::default().with_depth(3).with_seed(s);
            let bae = run_bae(&ds.matrix, &cfg).unwrap();
            let (_, _, single) = run_single(
                &ds.matrix,
                3,
                cfg.alpha,
                &TrainConfig::default().with_seed(s),
            )
            .unwrap();
            let single_ap = average_precision(single.scores(), &labels).unwrap();
            SynthSeed {
                labels,
                bae,
                single_ap,
            }
        })
        .collect()
}

fn outlier_ratio_decline(syn: &[SynthSeed]) -> Check {
    let window = |s: &SynthSeed, r: std::ops::Range<usize>| {
        let v: Vec<f64> = s.bae.state.components[r]
            .iter()
            .map(|c| metrics::outlier_ratio(&c.sample_indices, &s.labels).unwrap())
            .collect();
        mean(&v)
    };
    let early = mean(&syn.iter().map(|s| window(s, 0..5)).collect::<Vec<_>>());
    let late = mean(&syn.iter().map(|s| window(s, 15..20)).collect::<Vec<_>>());
    let detail = format!("iterations 1-5: {early:.4}, iterations 16-20: {late:.4}");
    ensure(late < early, || detail.clone())?;
    Ok(detail)
}

fn load_labeled(path: &Path, label: &str) -> Dataset {
    let opts = CsvOptions {
        label_column: Some(LabelColumn::parse(label)),
        ..CsvOptions::default()
    };
    data::normalize_min_max(&data::load_csv(path, &opts).unwrap())
}

/// Real-data pairs: depth-selected BAE against a nine-layer autoencoder.
struct RealSeed {
    bae_ap: f64,
    sae_ap: f64,
    diversity: f64,
}

fn real_benchmark() -> Vec<RealSeed> {
    let ds = load_labeled(&fixture(), "label");
    let labels = ds.labels.clone().unwrap();
    (0..SEEDS)
        .map(|s| {
            let cfg = BaeConfig::default().with_seed(s);
            let run = select_depth(&ds.matrix, &cfg, &[3, 5, 7, 9])
                .unwrap()
                .into_chosen_run();
            let (_, _, sae) = run_single(
                &ds.matrix,
                9,
                cfg.alpha,
                &TrainConfig::default().with_seed(s),
            )
            .unwrap();
            RealSeed {
                bae_ap: average_precision(run.scores.scores(), &labels).unwrap(),
                sae_ap: average_precision(sae.scores(), &labels).unwrap(),
                diversity: ensemble_diversity(&metrics::component_rankings(&run.state)).unwrap(),
            }
        })
        .collect()
}

fn ensemble_beats_single(syn: &[SynthSeed], real: &[RealSeed]) -> Check {
    let bae_syn = mean(
        &syn.iter()
            .map(|s| average_precision(s.bae.scores.scores(), &s.labels).unwrap())
            .collect::<Vec<_>>(),
    );
    let single_syn = mean(&syn.iter().map(|s| s.single_ap).collect::<Vec<_>>());
    let bae_real = mean(&real.iter().map(|r| r.bae_ap).collect::<Vec<_>>());
    let sae_real = mean(&real.iter().map(|r| r.sae_ap).collect::<Vec<_>>());
    let detail = format!(
        "synthetic BAE {bae_syn:.4} vs AE {single_syn:.4}; wine BAE {bae_real:.4} vs SAE9 {sae_real:.4}"
    );
    ensure(bae_syn >= single_syn && bae_real >= sae_real, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn lympho_reproduction() -> Outcome {
    let Ok(path) = std::env::var("BAE_LYMPHO_CSV") else {
        return Outcome::Skip("BAE_LYMPHO_CSV not set".into());
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(&path, tmp.path());
    cfg.label_col = std::env::var("BAE_LYMPHO_LABEL").ok();
    cfg.runs = 10;
    match bae_cli::cmd_run(&cfg, false) {
        Ok(r) => match r.aggregate.aucpr_mean {
            Some(ap) if ap >= 0.75 => Outcome::Pass(format!("mean AUCPR {ap:.4} over 10 runs")),
            Some(ap) => Outcome::Fail(format!("mean AUCPR {ap:.4} < 0.75")),
            None => Outcome::Fail("no labels found".into()),
        },
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn depth_selection_consistency() -> Check {
    let mut chosen = vec![];
    for s in 0..5 {
        let ds = data::make_synthetic(1000, 20, 2, s).unwrap();
        let sel = select_depth(
            &ds.matrix,
            &BaeConfig::default().with_seed(s),
            &[3, 5, 7, 9],
        )
        .unwrap();
        for (score, run) in sel.per_depth.iter().zip(&sel.runs) {
            let recomputed: Vec<f64> = run
                .state
                .scoring_components()
                .iter()
                .map(|c| c.sample_indices.iter().map(|&j| c.errors[j]).sum())
                .collect();
            close(
                "recorded depth error",
                &[score.mean_sample_error],
                &[mean(&recomputed)],
                1e-9,
            )?;
        }
        let best = sel
            .per_depth
            .iter()
            .map(|d| d.mean_sample_error)
            .fold(f64::INFINITY, f64::min);
        let got = sel
            .per_depth
            .iter()
            .find(|d| d.depth == sel.chosen_depth)
            .unwrap();
        ensure(got.mean_sample_error == best, || {
            format!(
                "seed {s}: chose {} with {} > {best}",
                got.depth, got.mean_sample_error
            )
        })?;
        chosen.push(sel.chosen_depth);
    }
    Ok(format!("chosen depths {chosen:?}"))
}

fn consensus_vs_median(syn: &[SynthSeed]) -> Check {
    let consensus = mean(
        &syn.iter()
            .map(|s| average_precision(s.bae.scores.scores(), &s.labels).unwrap())
            .collect::<Vec<_>>(),
    );
    let median = mean(
        &syn.iter()
            .map(|s| {
                metrics::median(&metrics::per_component_ap(&s.bae.state, &s.labels).unwrap())
                    .unwrap()
            })
            .collect::<Vec<_>>(),
    );
    let detail = format!("consensus {consensus:.4} vs component median {median:.4}");
    ensure(consensus >= median, || detail.clone())?;
    Ok(detail)
}

fn diversity_range(syn: &[SynthSeed], real: &[RealSeed]) -> Check {
    let a = ranks(&[0, 1, 2, 3, 4]);
    ensure(
        ensemble_diversity(&[a.clone(), a.clone()]).unwrap() == 0.0,
        || "identical rankings".into(),
    )?;
    ensure(
        ensemble_diversity(&[a.clone(), a.reversed()]).unwrap() == 2.0,
        || "reversed rankings".into(),
    )?;
    let mut all: Vec<f64> = real.iter().map(|r| r.diversity).collect();
    all.extend(
        syn.iter()
            .map(|s| ensemble_diversity(&metrics::component_rankings(&s.bae.state)).unwrap()),
    );
    ensure(all.iter().all(|d| (0.0..=2.0).contains(d)), || {
        format!("out of range: {all:?}")
    })?;
    let (lo, hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| {
            (l.min(*d), h.max(*d))
        });
    Ok(format!("{} runs, D in [{lo:.3}, {hi:.3}]", all.len()))
}

fn report(n: usize, name: &str, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Outcome::Pass(d) => ("PASS", d, true),
        Outcome::Fail(d) => ("FAIL", d, false),
        Outcome::Skip(d) => ("SKIP", d, true),
    };
    println!("criterion {n} {name:<32} {tag}  ({secs:.1}s) {detail}");
    ok
}

fn guarded(f: impl FnOnce() -> Check) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(d)) => Outcome::Pass(d),
        Ok(Err(d)) => Outcome::Fail(d),
        Err(p) => Outcome::Fail(
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    }
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, "formula oracles", t, guarded(formula_oracles));
    let t = Instant::now();
    ok &= report(2, "gradient check", t, guarded(gradient_check));
    let t = Instant::now();
    ok &= report(3, "determinism", t, guarded(determinism));

    let t = Instant::now();
    let syn = synthetic_benchmark();
    println!(
        "  synthetic benchmark: {SEEDS} seeds in {:.1}s",
        t.elapsed().as_secs_f64()
    );
    let t = Instant::now();
    let real = real_benchmark();
    println!(
        "  wine benchmark: {SEEDS} seeds in {:.1}s",
        t.elapsed().as_secs_f64()
    );

    let t = Instant::now();
    ok &= report(
        4,
        "outlier-ratio decline",
        t,
        guarded(|| outlier_ratio_decline(&syn)),
    );
    let t = Instant::now();
    ok &= report(
        5,
        "ensemble beats single AE",
        t,
        guarded(|| ensemble_beats_single(&syn, &real)),
    );
    let t = Instant::now();
    ok &= report(6, "small-dataset reproduction", t, lympho_reproduction());
    let t = Instant::now();
    ok &= report(
        7,
        "depth-selection consistency",
        t,
        guarded(depth_selection_consistency),
    );
    let t = Instant::now();
    ok &= report(
        8,
        "consensus vs component median",
        t,
        guarded(|| consensus_vs_median(&syn)),
    );
    let t = Instant::now();
    ok &= report(
        9,
        "diversity range",
        t,
        guarded(|| diversity_range(&syn, &real)),
    );

    if !ok {
        std::process::exit(1);
    }
}

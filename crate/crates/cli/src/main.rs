use std::process::ExitCode;

use bae_cli::cli::{Cli, Command};
use bae_cli::{commands, CliResult, ExperimentReport};
use clap::Parser;

fn summarize(r: &ExperimentReport) {
    let a = &r.aggregate;
    match (a.aucpr_mean, a.aucpr_std) {
        (Some(m), Some(s)) => println!(
            "{} on {}: AUCPR {} (std {}) over {} run(s)",
            r.method,
            r.dataset.name,
            bae_cli::report::percent(m),
            bae_cli::report::percent(s),
            a.runs
        ),
        _ => println!(
            "{} on {}: {} run(s), no labels",
            r.method, r.dataset.name, a.runs
        ),
    }
    if let Some(d) = a.diversity_mean {
        println!("diversity {d:.3}, depths {:?}", a.chosen_depths);
    }
    println!("wrote {}", r.config.out.display());
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let report = match &args.from_report {
                Some(path) => commands::cmd_rerun(path, args.common.out.clone())?,
                None => commands::cmd_run(&args.to_config()?, args.common.save_models)?,
            };
            summarize(&report);
        }
        Command::BaselineSae(args) => {
            let report = commands::cmd_baseline_sae(
                &args.common.to_config()?,
                args.depth,
                args.common.save_models,
            )?;
            summarize(&report);
        }
        Command::Synth(a) => {
            let ds = commands::cmd_synth(a.inliers, a.outliers, a.dim, a.seed, &a.out)?;
            println!("wrote {} rows to {}", ds.n_rows(), a.out.display());
        }
        Command::Report(a) => {
            let t = commands::cmd_report(&a.reports, a.out.as_deref())?;
            print!("AUCPR (%)\n{}\n", t.aucpr.to_text());
            if !t.diversity.rows.is_empty() {
                print!("Diversity\n{}", t.diversity.to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmt_adjugate::config::{map_ids, ConfigError};
use gmt_adjugate::runner::{default_workers, write_outputs, EXIT_USAGE};
use gmt_adjugate::{run_plan, CheckId, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "gmt-adjugate", version, about = "Identity checks for distributional adjugates of gallery maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a JSON config.
    Run {
        /// Config file; optional when --map is given.
        config: Option<PathBuf>,
        #[arg(long)]
        map: Option<String>,
        /// Check id, repeatable; replaces the config's list.
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Base resolution; runs the schedule [N, 2N].
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Print gallery and check ids and exit.
        #[arg(long)]
        list: bool,
    },
}

fn print_list() {
    println!("maps:");
    for id in map_ids() {
        println!("  {id}");
    }
    println!("checks:");
    for c in CheckId::ALL {
        println!("  {:<16} {}", c.as_str(), c.describe());
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let Command::Run { config, map, checks, n, seed, out, workers, list } = Cli::parse().command;
    if list {
        print_list();
        return ExitCode::SUCCESS;
    }
    let mut cfg = match &config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return usage(e),
        },
        None if map.is_some() => RunConfig::default(),
        None => return usage(ConfigError::NoMap),
    };
    cfg.apply(Overrides { map, checks, n, seed, out });
    let plan = match cfg.resolve() {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    if let Err(e) = plan.map.validate(plan.seed, 1000) {
        return usage(e);
    }
    let outcome = run_plan(&plan, workers.unwrap_or_else(default_workers));
    for e in &outcome.errors {
        eprintln!("{}: {}", e.check, e.message);
    }
    if let Err(e) = write_outputs(&plan.out, &outcome.reports) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    for r in &outcome.reports {
        let entry = r.ij.map(|[i, j]| format!(" ({i},{j})")).unwrap_or_default();
        println!(
            "{:<16} {}{entry}: left {:.6e} right {:.6e} gap {:.2e} {}",
            r.theorem,
            r.map,
            r.left,
            r.right,
            r.rel_gap,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    ExitCode::from(outcome.exit_code() as u8)
}

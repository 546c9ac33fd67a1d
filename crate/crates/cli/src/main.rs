//! `roughlab <subcommand> --config <file> [--set k=v]... [--out dir] [--seed u64] [--workers n]`
//!
//! Exit code 0 on pass, 2 when an acceptance criterion fails, 1 on error.

mod commands;
mod manifest;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use roughlab::lab::ExperimentConfig;
use serde_json::Value;

use commands::{CliError, CliResult};
use manifest::OutputDir;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Sample the driver and write its path per seed.
    Simulate,
    /// Canonical second-level lift along the partition family.
    Lift,
    /// Three-condition RIE diagnostic along the partition family.
    RieCheck,
    /// Reference solution and top-level Euler scheme per seed.
    Solve,
    /// Euler convergence ladder with rate fit.
    Rates,
    /// Approximate Euler ladder against the exact one.
    Approx,
    /// Jump-augmented against dyadic partitions for a Levy driver.
    Ablate,
}

impl Command {
    fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "roughlab",
    version,
    about = "Euler schemes for rough differential equations driven by cadlag paths"
)]
struct Cli {
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry by dotted path, e.g. `levels.max=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `outputs.dir` or `roughlab-out/<subcommand>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn effective_config(cli: &Cli) -> CliResult<(Value, ExperimentConfig)> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not valid JSON: {e}", cli.config.display())))?;
    for o in &cli.overrides {
        overrides::apply_override(&mut doc, o).map_err(CliError::Usage)?;
    }
    if let Some(seed) = cli.seed {
        doc["seeds"] = Value::from(vec![seed]);
    }
    let cfg = ExperimentConfig::from_value(doc)?;
    // Serialize the parsed config so defaults are spelled out in the record.
    Ok((serde_json::to_value(&cfg)?, cfg))
}

fn run(cli: &Cli) -> CliResult<bool> {
    let (doc, cfg) = effective_config(cli)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("roughlab-out").join(cli.command.name()));
    let mut out = OutputDir::create(&dir)?;
    let (passed, details) = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Lift => commands::lift(&cfg, &mut out),
        Command::RieCheck => commands::rie_check(&cfg, &mut out),
        Command::Solve => commands::solve(&cfg, &mut out),
        Command::Rates => commands::rates(&cfg, &mut out),
        Command::Approx => commands::approx(&cfg, &mut out),
        Command::Ablate => commands::ablate(&cfg, &mut out),
    }?;
    out.finish(&cli.command.name(), &doc, &cfg.seeds, details)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(CliError::Usage(format!(
            "cannot start {:?} workers: {e}",
            cli.workers
        ))),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "roughlab {}: acceptance criterion failed",
                cli.command.name()
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("roughlab {}: {e}", cli.command.name());
            ExitCode::from(1)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use stackelberg_lab::{load_config, parse_config, run_experiment, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "stackelberg-lab", version, about = "Run min-max Stackelberg game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a bundled example game with one of the learning dynamics.
    StackelbergSolve(Flags),
    /// Run tâtonnement or myopic best response on a fixed Fisher market.
    FisherStatic(Flags),
    /// Track equilibria of randomly drawn online Fisher markets.
    FisherOnline(Flags),
    /// Check the asymmetric tracking bounds on drifting quadratic games.
    RobustnessAsym(Flags),
    /// Check the symmetric tracking bounds on drifting quadratic games.
    RobustnessSym(Flags),
    /// Measure online mirror descent regret on bundled loss sequences.
    RegretReport(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this seed only.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write an SVG chart per run.
    #[arg(long)]
    plot: bool,
    /// Override the config's tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Flags) {
        match self {
            Command::StackelbergSolve(f) => (ExperimentKind::StackelbergSolve, f),
            Command::FisherStatic(f) => (ExperimentKind::FisherStatic, f),
            Command::FisherOnline(f) => (ExperimentKind::FisherOnline, f),
            Command::RobustnessAsym(f) => (ExperimentKind::RobustnessAsym, f),
            Command::RobustnessSym(f) => (ExperimentKind::RobustnessSym, f),
            Command::RegretReport(f) => (ExperimentKind::RegretReport, f),
        }
    }
}

fn configure(kind: ExperimentKind, flags: &Flags) -> Result<ExperimentConfig> {
    let mut config = match &flags.config {
        Some(path) => load_config(path)?,
        None => parse_config(&format!("kind = \"{kind}\"\n"))?,
    };
    if config.kind != kind {
        bail!("config describes a {} experiment, not {kind}", config.kind);
    }
    if let Some(seed) = flags.seed {
        config.seeds = vec![seed];
    }
    if let Some(dir) = &flags.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(tol) = flags.tol {
        if matches!(kind, ExperimentKind::RobustnessAsym | ExperimentKind::RobustnessSym) {
            bail!("{kind} checks its bounds with a fixed relative slack and takes no --tol");
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            bail!("--tol must be a nonnegative number");
        }
        config.tol = tol;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<bool> {
    let (kind, flags) = cli.command.split();
    let config = configure(kind, &flags)?;
    let summary = run_experiment(&config, RunOptions { plot: flags.plot })?;
    // A closed stdout (for example a pipe into `head`) is not a failure.
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", summary.render());
    let _ = writeln!(out, "artifacts in {}", config.out_dir.display());
    Ok(summary.success())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

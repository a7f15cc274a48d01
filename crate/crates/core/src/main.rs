//! Command-line front end.
//!
//! `spikesim <mode> --config <path> [--out <dir>] [--jobs <k>] [--seed-grid <n>]`
//!
//! The subcommand selects the mode and overrides the file's own `mode` key,
//! re-validating the file against the requested mode. Exit codes: 0 on
//! success, 1 when the configuration is unreadable or invalid, 2 when a
//! validated experiment fails at runtime (solver breakdown, i/o, data-
//! dependent template errors). Partial artifacts stay on disk with their
//! `MANIFEST.txt` recording how far the run got.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spikesim::harness::{
    parse_config_with_mode, run_experiment, HarnessError, Mode, RunOptions, DEFAULT_SEED_GRID,
};

#[derive(Parser)]
#[command(
    name = "spikesim",
    about = "Spike patterns under strong directed dispersal: closed-form analysis and finite-volume experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report signal maxima, admissible spike heights, and predicted rates.
    Analyze(ModeArgs),
    /// Integrate one species and compare the outcome against predictions.
    Simulate(ModeArgs),
    /// Integrate two species sharing one resource.
    Compete(ModeArgs),
    /// Print the leading spectrum of the linearization about the configured field.
    Eig(ModeArgs),
    /// Run simulate over a parameter grid on a bounded worker pool.
    Sweep(ModeArgs),
}

#[derive(Args)]
struct ModeArgs {
    /// Experiment description file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory root (overrides the file's `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep worker pool size (default: machine parallelism).
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Seeds per axis for the critical-point search.
    #[arg(long = "seed-grid", value_parser = clap::value_parser!(u16).range(8..))]
    seed_grid: Option<u16>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Analyze(a) => (Mode::Analyze, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Compete(a) => (Mode::Compete, a),
        Command::Eig(a) => (Mode::Eig, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(error) => {
            eprintln!("config {}: {error}", args.config.display());
            return ExitCode::from(1);
        }
    };

    let cfg = match parse_config_with_mode(&text, Some(mode)) {
        Ok(cfg) => cfg,
        Err(issues) => {
            for issue in &issues {
                eprintln!("{issue}");
            }
            eprintln!("{}: {} problem(s) found", args.config.display(), issues.len());
            return ExitCode::from(1);
        }
    };

    let opts = RunOptions {
        out_dir: args.out.clone(),
        jobs: args.jobs.map(usize::from).unwrap_or(0),
        seed_grid: args.seed_grid.map(usize::from).unwrap_or(DEFAULT_SEED_GRID),
    };

    let mut log = String::new();
    let result = run_experiment(&cfg, &opts, &mut log);
    print!("{log}");
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            if let HarnessError::Config(issues) = &error {
                for issue in issues {
                    eprintln!("{issue}");
                }
            }
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

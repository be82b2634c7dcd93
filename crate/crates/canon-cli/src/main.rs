//! Experiment harness for conditional advantage estimation: single training
//! runs, mu/alpha sweeps, analytic-vs-Monte-Carlo verification of the
//! equal-split amplification result, and SVG charts of logged series.

mod commands;
mod config;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{SweepAxis, VerifyArgs};

/// Failures are split by exit code: misconfiguration (2) versus runtime
/// failure (1).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

#[derive(Parser)]
#[command(
    name = "canon",
    version,
    about = "Conditional advantage estimation experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Mu,
    Alpha,
}

#[derive(Subcommand)]
enum Command {
    /// Train once from a JSON config and write CSV, SVG charts, and a manifest.
    Run {
        /// Path to the run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for run.csv, *.svg, manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Replace the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the cross product of axis values and seeds, then a summary CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Which knob to sweep (requires the canon estimator).
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Maximum concurrent cells (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check the analytic amplification results against the Monte-Carlo oracle.
    VerifyTheorem {
        /// Comma-separated condition probabilities, default 0.1..0.9.
        #[arg(long = "p-grid", value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        /// Comma-separated split fractions, default 0.25,0.5,0.75.
        #[arg(long = "lambda-grid", value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        /// Accuracy of condition-satisfying responses.
        #[arg(long = "a-plus", default_value_t = 0.8)]
        a_plus: f64,
        /// Accuracy of non-satisfying responses.
        #[arg(long = "a-minus", default_value_t = 0.2)]
        a_minus: f64,
        /// Group size G for the Monte-Carlo rows.
        #[arg(long, default_value_t = 16)]
        groups: usize,
        /// Groups sampled per Monte-Carlo row.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render CSV columns as a static SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', required = true)]
        series: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, seed } => commands::cmd_run(&config, &out, seed),
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            out,
            jobs,
        } => {
            let axis = match axis {
                Axis::Mu => SweepAxis::Mu,
                Axis::Alpha => SweepAxis::Alpha,
            };
            commands::cmd_sweep(&config, axis, &values, &seeds, &out, jobs)
        }
        Command::VerifyTheorem {
            p_grid,
            lambda_grid,
            a_plus,
            a_minus,
            groups,
            samples,
            seed,
        } => {
            let defaults = VerifyArgs::default();
            let args = VerifyArgs {
                p_grid: p_grid.unwrap_or(defaults.p_grid),
                lambda_grid: lambda_grid.unwrap_or(defaults.lambda_grid),
                a_plus,
                a_minus,
                group_size: groups,
                n_groups: samples,
                seed,
            };
            commands::cmd_verify_theorem(&args)
        }
        Command::Plot { csv, series, out } => commands::cmd_plot(&csv, &series, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    debug_assert!(commands::series_columns_match_csv_header());
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Validation(message)) => {
            eprintln!("invalid configuration:\n{message}");
            ExitCode::from(2)
        }
    }
}

//! `yukawa`: experiments for the perimeter-plus-Yukawa stripe problem.
//!
//! Every subcommand writes CSV files and a `<command>.manifest.json` into
//! `--out`. Exit codes: 0 success, 2 configuration error, 3 numerical failure;
//! failures print a JSON error object on stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::*;
use output::{CliError, CliResult, Run};

#[derive(Parser, Debug, Serialize)]
#[command(name = "yukawa", version, about = "Stripe formation for perimeter plus Yukawa functionals", args_override_self = true)]
struct Cli {
    /// Flat `key = value` file; flags on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV output and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
enum Command {
    /// Tabulate the sliced kernel and its derivative-sign report.
    Kernel(KernelArgs),
    /// Periodic stripe energy as a function of the width.
    Stripes(StripesArgs),
    /// Optimal stripe width and energy over a list of M.
    OptimalWidth(OptimalWidthArgs),
    /// Evaluate the functional on a set.
    Energy(EnergyArgs),
    /// Boundary terms r and v, interior term w, and the local energy field.
    Decompose(DecomposeArgs),
    /// Compare the averaged local energy with the slice splitting.
    AverageCheck(AverageCheckArgs),
    /// Rank stripes against competing patterns.
    Compare(CompareArgs),
    /// Simulated annealing on grid sets.
    Anneal(AnnealArgs),
    /// Best stripe width as a function of the period.
    ScanPeriod(ScanPeriodArgs),
    /// Normalization constants, nonlocal perimeters and tilted interfaces.
    Gamma(GammaArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernel(_) => "kernel",
            Command::Stripes(_) => "stripes",
            Command::OptimalWidth(_) => "optimal-width",
            Command::Energy(_) => "energy",
            Command::Decompose(_) => "decompose",
            Command::AverageCheck(_) => "average-check",
            Command::Compare(_) => "compare",
            Command::Anneal(_) => "anneal",
            Command::ScanPeriod(_) => "scan-period",
            Command::Gamma(_) => "gamma",
        }
    }
}

/// Subcommand names as typed on the command line.
const COMMANDS: [&str; 10] = [
    "kernel",
    "stripes",
    "optimal-width",
    "energy",
    "decompose",
    "average-check",
    "compare",
    "anneal",
    "scan-period",
    "gamma",
];

fn execute(cli: &Cli) -> CliResult<PathBuf> {
    let mut run = Run::new(cli.command.name(), &cli.out)?;
    match &cli.command {
        Command::Kernel(a) => kernel(a, &mut run)?,
        Command::Stripes(a) => stripes(a, &mut run)?,
        Command::OptimalWidth(a) => optimal_width_table(a, &mut run)?,
        Command::Energy(a) => energy(a, &mut run)?,
        Command::Decompose(a) => decompose(a, &mut run)?,
        Command::AverageCheck(a) => average_check(a, &mut run)?,
        Command::Compare(a) => compare(a, &mut run)?,
        Command::Anneal(a) => anneal_seeds(a, &mut run)?,
        Command::ScanPeriod(a) => scan_period(a, &mut run)?,
        Command::Gamma(a) => gamma(a, &mut run)?,
    }
    run.finish(&cli.command)
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect(), &COMMANDS) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Config(e.render().to_string())),
    };
    match execute(&cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

//! `gravint`: frequency reports, fringe records, parameter sweeps, the
//! phase-space oracle and fringe fitting from the command line.
//!
//! Exit status: 0 on success, 2 for input errors, 3 for numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

#[derive(Parser, Debug)]
#[command(name = "gravint", version, about = "Interferometric phases from two source masses")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Configuration file (TOML). Defaults to the built-in reference geometry.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for synthetic noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Integrator tolerance (simulate --integrate) or phase tolerance
    /// (validate-oracle).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ω_C, ω_Q, ball radii and null placements for a geometry.
    Frequencies,
    /// Fringe record for one dynamical model.
    Simulate(SimulateArgs),
    /// ω_C and ω_Q across a range of one geometric parameter.
    Sweep(SweepArgs),
    /// Phase-space evolution checked against the two-state frequencies.
    ValidateOracle(OracleArgs),
    /// Damped-fringe fit of a record.
    Fit(FitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Schrodinger,
    Classical,
    TilloyDiosi,
    General,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Phase frequency for schrodinger/classical; defaults to ω_Q/ω_C of the config.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "omega-g")]
    pub omega_g: Option<f64>,
    /// Population drift couplings for `general` built from lambda and omega-g.
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Complex coefficient as `re,im`.
    #[arg(long = "a-lr", value_parser = parse_complex, allow_hyphen_values = true)]
    pub a_lr: Option<Complex64>,
    #[arg(long = "b-lr", value_parser = parse_complex, allow_hyphen_values = true)]
    pub b_lr: Option<Complex64>,
    #[arg(long = "b-rl", value_parser = parse_complex, allow_hyphen_values = true)]
    pub b_rl: Option<Complex64>,
    /// Record length in seconds; defaults to the config hold time.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long = "noise-sd", default_value_t = 0.0)]
    pub noise_sd: f64,
    /// Integrate the equations of motion instead of using the exact solution.
    #[arg(long)]
    pub integrate: bool,
    #[arg(long, default_value = "record.csv")]
    pub output: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    D1,
    D2,
    M1,
    M2,
    Dx,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub parameter: SweepParameter,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value = "sweep.csv")]
    pub output: String,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Grid points per axis, overriding the config.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of phase readouts over the hold.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also write the final Wigner grid as a binary snapshot.
    #[arg(long)]
    pub snapshot: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Fringe record CSV.
    pub record: PathBuf,
    #[arg(long = "omega-guess")]
    pub omega_guess: Option<f64>,
    #[arg(long = "lambda-guess")]
    pub lambda_guess: Option<f64>,
    #[arg(long, default_value = "fit.txt")]
    pub output: String,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("'{s}' is not `re,im`"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("'{s}' is not `re,im`")),
    }
}

/// Failure classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

pub fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

pub fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Input(e) | Failure::Numerical(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}

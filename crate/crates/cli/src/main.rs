//! `apwave` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 mathematical
//! refusal (resonance, non-convergence) or failed verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "apwave", version, about = "Small-amplitude steady water waves with constant vorticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect frequency-pair definitions.
    #[command(subcommand)]
    Freqset(FreqsetCmd),
    /// Bifurcation values of every positive frequency of a pair, as CSV.
    Dispersion(DispersionArgs),
    /// Continue a local bifurcation branch and write branch.json and branch.csv.
    Branch(BranchArgs),
    /// Rebuild the flow for the points of a branch file and check the residuals.
    Verify(VerifyArgs),
    /// Reproducible demonstrations.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Surface profile `x, eta` of one branch point, as CSV.
    Profile(ProfileArgs),
}

#[derive(Subcommand, Debug)]
enum FreqsetCmd {
    /// Check the closure laws of a pair file; prints the resolved pair and the report as JSON.
    Check {
        /// Pair definition (TOML, or JSON when the extension is .json).
        pair: PathBuf,
    },
    /// List the modes of a pair below its cutoff.
    Gen {
        pair: PathBuf,
        /// Override the cutoff (rad/m).
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct PhysicsArgs {
    /// Vorticity γ (1/s).
    #[arg(long)]
    gamma: Option<f64>,
    /// Gravitational acceleration g (m/s²).
    #[arg(long)]
    g: Option<f64>,
    /// Conformal mean depth h (m).
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct DispersionArgs {
    /// Pair definition file.
    #[arg(long)]
    pair: PathBuf,
    #[command(flatten)]
    physics: PhysicsArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BranchArgs {
    /// Run configuration (TOML); flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pair definition file, replacing the config's pair.
    #[arg(long)]
    pair: Option<PathBuf>,
    #[command(flatten)]
    physics: PhysicsArgs,
    /// Kernel mode, e.g. `cos(1)` or `sin(0,2)`.
    #[arg(long)]
    k0: Option<String>,
    #[arg(long, value_enum)]
    root: Option<Root>,
    /// Largest amplitude of the pinned coefficient (m).
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Galerkin cutoff (rad/m).
    #[arg(long)]
    cutoff: Option<f64>,
    /// Continue towards negative amplitudes as well.
    #[arg(long)]
    both_signs: bool,
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Root {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Branch file written by `apwave branch`.
    branch: PathBuf,
    /// Grid nodes along x.
    #[arg(long, default_value_t = 200)]
    nx: usize,
    /// Grid nodes along y.
    #[arg(long, default_value_t = 200)]
    ny: usize,
    /// Check every n-th point only (the last point is always checked).
    #[arg(long, default_value_t = 1)]
    every: usize,
    #[arg(long, default_value_t = 1e-8)]
    bernoulli_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    boundary_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    laplacian_tol: f64,
    #[arg(long, default_value_t = 1.9)]
    order_min: f64,
    #[arg(long, default_value_t = 2.1)]
    order_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    cr_tol: f64,
    /// Output directory for verify.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum DemoCmd {
    /// Two distinct branches at one bifurcation value.
    Nonuniqueness(DemoArgs),
    /// A branch over the generators (1, √5).
    Almostperiodic(DemoArgs),
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Vorticity γ (1/s).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Gravitational acceleration g (m/s²).
    #[arg(long, default_value_t = 9.8)]
    g: f64,
    /// Conformal mean depth h (m).
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    coeff_bound: Option<i32>,
    /// Sample points in the emitted profiles.
    #[arg(long, default_value_t = 1024)]
    samples: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Branch file written by `apwave branch`.
    branch: PathBuf,
    /// Index into the branch points; the last point when absent.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, default_value_t = 512)]
    samples: usize,
    /// Window start (m).
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    /// Window end (m); one period of the first generator when absent.
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Freqset(FreqsetCmd::Check { pair }) => commands::freqset_check(&pair),
        Command::Freqset(FreqsetCmd::Gen { pair, cutoff, format, output }) => {
            commands::freqset_gen(&pair, cutoff, matches!(format, Format::Csv), output.as_deref())
        }
        Command::Dispersion(a) => commands::dispersion(&a.pair, &a.physics, a.output.as_deref()),
        Command::Branch(a) => commands::branch(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Demo(DemoCmd::Nonuniqueness(a)) => commands::demo_nonuniqueness(&a),
        Command::Demo(DemoCmd::Almostperiodic(a)) => commands::demo_almost_periodic(&a),
        Command::Profile(a) => commands::profile(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

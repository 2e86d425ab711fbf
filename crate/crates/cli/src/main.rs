//! `vpdheat`: command-line front end for heat kernels and random walks on
//! virtual persistence diagram groups.
//!
//! Exit status is 0 on success, 2 when inputs fail validation and 3 when a
//! cross-check or bound fails.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use vpdheat::mixtures::MixtureMeasure;
use vpdheat::pipeline::Grid;
use vpdheat::spectral::QuadratureSpec;

use input::WalkArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] vpdheat::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "vpdheat",
    version,
    about = "Heat semigroups and random walks on virtual persistence diagram groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// H0 persistence diagram of a weighted graph.
    Persist {
        #[arg(long)]
        graph: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Virtual diagram `A - B` of two diagram files.
    Vpd {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance `ρ(A, B)` between two (signed) diagram files.
    Rho {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Jump table of `ν` and values of the symbol at the given angles.
    Symbol {
        #[command(flatten)]
        walk: WalkArgs,
        /// Comma-separated angles, one per generator; repeatable.
        #[arg(long)]
        theta: Vec<String>,
    },
    /// Heat kernel at time `t` by the series route, as CSV.
    Heat {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-9)]
        series_tol: f64,
        /// Also check the largest values against Fourier inversion with this
        /// quadrature.
        #[arg(long)]
        check: Option<QuadratureSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Return probability, collision, energy, scale and resolvent by both
    /// routes.
    Invariants {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value = "0.05:1:8")]
        t_grid: Grid,
        #[arg(long, default_value = "2:8:4")]
        s_grid: Grid,
        /// `grid:N` or `mc:SAMPLES:SEED`.
        #[arg(long, default_value = "grid:64")]
        quad: QuadratureSpec,
        #[arg(long, default_value_t = 1e-6)]
        series_tol: f64,
        /// Directory for invariants.csv, resolvent.csv and cross_checks.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Functional-inequality reports, one JSON file per theorem.
    Bounds {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value = "0.05:1:8")]
        t_grid: Grid,
        #[arg(long, default_value = "2:8:4")]
        s_grid: Grid,
        #[arg(long, default_value = "grid:64")]
        quad: QuadratureSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Majorization checks for two mixing measures ordered in convex order.
    Mixture {
        #[command(flatten)]
        walk: WalkArgs,
        /// `u:w,u:w,...`
        #[arg(long)]
        eta1: MixtureMeasure,
        #[arg(long)]
        eta2: MixtureMeasure,
        /// JSON array of signed diagrams on the walk's ground space.
        #[arg(long)]
        elements: PathBuf,
        #[arg(long, default_value = "grid:64")]
        quad: QuadratureSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimates against the series references.
    Simulate {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value = "0.25:1:4")]
        t_grid: Grid,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Radius of the mass and `ρ` tails.
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Endpoint histogram at the last time of the grid, as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// End-to-end run from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Watts-Strogatz graph with integer weights.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: f64,
        /// Inclusive weight range `lo:hi`.
        #[arg(long, default_value = "1:8")]
        weights: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VPDHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("VPDHEAT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Persist { graph, out } => commands::persist(&graph, out.as_deref()),
        Command::Vpd { a, b, out } => commands::vpd(&a, &b, out.as_deref()),
        Command::Rho { a, b } => commands::rho(&a, &b),
        Command::Symbol { walk, theta } => commands::symbol(&walk, &theta),
        Command::Heat {
            walk,
            t,
            series_tol,
            check,
            out,
        } => commands::heat(&walk, t, series_tol, check, out.as_deref()),
        Command::Invariants {
            walk,
            t_grid,
            s_grid,
            quad,
            series_tol,
            out,
        } => commands::invariants(&walk, &t_grid, &s_grid, quad, series_tol, &out),
        Command::Bounds {
            walk,
            t_grid,
            s_grid,
            quad,
            seed,
            out,
        } => commands::bounds(&walk, &t_grid, &s_grid, quad, seed, &out),
        Command::Mixture {
            walk,
            eta1,
            eta2,
            elements,
            quad,
            out,
        } => commands::mixture(&walk, &eta1, &eta2, &elements, quad, out.as_deref()),
        Command::Simulate {
            walk,
            t_grid,
            samples,
            seed,
            radius,
            out,
            histogram,
        } => commands::simulate(
            &walk,
            &t_grid,
            commands::SimulateOptions { samples, seed, radius },
            out.as_deref(),
            histogram.as_deref(),
        ),
        Command::Pipeline { config, out } => commands::pipeline(&config, out),
        Command::GenGraph {
            n,
            k,
            p,
            weights,
            seed,
            out,
        } => commands::gen_graph(n, k, p, &weights, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

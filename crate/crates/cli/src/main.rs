//! `vertflex`: feasible-operation-region runs from the shell.
//!
//! Exit codes: 0 success, 1 usage or unusable input, 2 the computation found
//! no feasible answer, 3 file system trouble.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

mod manifest;
mod ops;

#[derive(Parser)]
#[command(name = "vertflex", version, about = "Aggregated PQ flexibility at the HV/MV interconnection: region sweeps, sampling baselines, loss maps, payment curves")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Globals {
    /// Seed for every stochastic step; equal seeds mean equal outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap the worker pool; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Newton mismatch tolerance, pu.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub pf_tol: f64,
    #[arg(long, global = true, default_value_t = 50)]
    pub pf_max_iter: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in benchmark grid as JSON.
    BuildGrid {
        /// Uniform line rating, A.
        #[arg(long, default_value_t = 220.0)]
        ith: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the region boundary and write it as JSON plus a CSV twin.
    For(ForArgs),
    /// Random-dispatch baseline: feasible interchange cloud and its hull.
    Sample(SampleArgs),
    /// Raster the region with the active-power losses of each reachable cell.
    LossMap(LossMapArgs),
    /// Evaluate a payment curve at a point or as a sweep CSV.
    Epf(EpfArgs),
    /// Size an EV fleet from penetration figures.
    DeriveFleet(FleetArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("scen").required(true).args(["scenario", "scenario_file"])))]
pub struct ForArgs {
    /// Grid JSON; omitted means the built-in benchmark.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Built-in scenario id: 0, 0a, 1, 1a, 2, 2a, 3, 3a.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Scenario JSON, replacing the built-in tables.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// Override every line rating, A.
    #[arg(long)]
    pub ith: Option<f64>,
    #[arg(long, default_value_t = 72)]
    pub directions: usize,
    #[arg(long, default_value_t = 50)]
    pub swarm_size: usize,
    #[arg(long, default_value_t = 150)]
    pub iterations: usize,
    /// Region JSON path; the boundary CSV lands at the same stem.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("scen").required(true).args(["scenario", "scenario_file"])))]
pub struct SampleArgs {
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    #[arg(long)]
    pub ith: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("scen").required(true).args(["scenario", "scenario_file"])))]
pub struct LossMapArgs {
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// Region JSON from an earlier `for` run; omitted means sweep one now.
    #[arg(long = "for")]
    pub for_file: Option<PathBuf>,
    #[arg(long)]
    pub ith: Option<f64>,
    #[arg(long, default_value_t = 41)]
    pub resolution: usize,
    #[arg(long, default_value_t = 72)]
    pub directions: usize,
    #[arg(long, default_value_t = 50)]
    pub swarm_size: usize,
    #[arg(long, default_value_t = 150)]
    pub iterations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CurveArg {
    Linear,
    Quadratic,
    Cubic,
}

#[derive(Args)]
#[command(group(ArgGroup::new("eval").required(true).args(["p", "sweep"])))]
pub struct EpfArgs {
    #[arg(long, value_enum)]
    pub curve: CurveArg,
    /// Cost factor, currency per kWh.
    #[arg(long, allow_negative_numbers = true)]
    pub cp: f64,
    /// Single normalized power in [-1, 1]; prints the cost.
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Evenly spaced sweep over [-1, 1]; emits CSV.
    #[arg(long)]
    pub sweep: Option<usize>,
    /// Write the sweep CSV here instead of stdout (adds a manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FleetArgs {
    /// Fraction of households owning an EV, 0 to 1.
    #[arg(long)]
    pub share: f64,
    #[arg(long, default_value_t = 0.7)]
    pub simultaneity: f64,
    #[arg(long, default_value_t = 15.0)]
    pub peak_household_kw: f64,
    #[arg(long, default_value_t = 0.5)]
    pub max_node_load_mw: f64,
    #[arg(long, default_value_t = 11.0)]
    pub ac_rating_kva: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive as "errors" but exit clean
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(n) = cli.globals.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::BuildGrid { ith, out } => ops::cmd_build_grid(&cli.globals, *ith, out),
        Command::For(args) => ops::cmd_for(&cli.globals, args),
        Command::Sample(args) => ops::cmd_sample(&cli.globals, args),
        Command::LossMap(args) => ops::cmd_loss_map(&cli.globals, args),
        Command::Epf(args) => ops::cmd_epf(&cli.globals, args),
        Command::DeriveFleet(args) => ops::cmd_derive_fleet(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

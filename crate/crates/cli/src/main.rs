//! `csmbench`: generate coupled standard map datasets, diagnose regimes,
//! evaluate forecasters under rollout and compare the results.
//!
//! Exit codes: 0 on success, 1 on a user or configuration error, 2 when an
//! internal invariant is violated.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "csmbench",
    version,
    about = "Coupled standard map forecasting benchmark"
)]
struct Cli {
    /// Worker threads for generation and evaluation (default: logical cores).
    #[arg(long, global = true, env = "CSM_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Where the design grid comes from. Without `--config` the desk profile
/// (20 ICs per instance) is used, or the full one with `--full`.
#[derive(Debug, Args)]
struct GridArgs {
    /// Grid configuration file (`key = value` lines).
    #[arg(long, conflicts_with = "full")]
    config: Option<PathBuf>,
    /// Use the full 100-IC profile.
    #[arg(long)]
    full: bool,
    /// Override the master seed.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the recorded trajectory length.
    #[arg(long)]
    record: Option<usize>,
    /// Override the number of ICs per instance (split rescaled 70/10/20).
    #[arg(long)]
    ics: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every instance and write the HDF5 dataset and per-orbit diagnostics.
    Generate {
        #[command(flatten)]
        grid: GridArgs,
        /// Instance filter, e.g. `K=2.0,rho=*,N=8`.
        #[arg(long, default_value = "")]
        filter: String,
        /// Output HDF5 file.
        #[arg(long, env = "CSM_DATA")]
        out: PathBuf,
        /// Diagnostics CSV (default: `diagnostics.csv` next to the dataset).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Per-orbit chaos indicators and the per-instance regime table.
    Diagnose {
        #[command(flatten)]
        grid: GridArgs,
        /// Read stored diagnostics from a dataset instead of recomputing.
        #[arg(long, conflicts_with_all = ["config", "full", "master_seed", "record", "ics"])]
        data: Option<PathBuf>,
        /// Instance filter, e.g. `K=6.5,N=8`.
        #[arg(long, default_value = "")]
        filter: String,
        /// Per-orbit CSV; the regime table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the IC partition as `partition,ic_index` CSV.
    Split {
        #[command(flatten)]
        grid: GridArgs,
        /// Take the grid from a dataset instead.
        #[arg(long, conflicts_with_all = ["config", "full", "ics"])]
        data: Option<PathBuf>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit and roll out models on the test trajectories of each instance.
    Evaluate {
        /// HDF5 dataset written by `generate`.
        #[arg(long, env = "CSM_DATA")]
        data: PathBuf,
        /// `persistence`, `climatology` (or `mean`), `ridge`, `oracle` or `extern:<command>`.
        #[arg(long = "model", required = true)]
        models: Vec<String>,
        /// Instance filter, e.g. `K=2.0,rho=*,N=8`.
        #[arg(long, default_value = "")]
        filter: String,
        /// Training seeds; each gives one result row per model and instance.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Rollout length in steps; a positive multiple of the horizon.
        #[arg(long, default_value_t = csmbench::evaluation::DEFAULT_CAP)]
        cap: usize,
        /// Per-request timeout for external models, in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Results CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trajectory CSV.
        #[arg(long)]
        detail: Option<PathBuf>,
    },
    /// Paired Wilcoxon and McNemar tests, fractional wins and crossover thresholds.
    Compare {
        /// Results CSV from `evaluate`; repeatable.
        #[arg(long = "results", required = true)]
        results: Vec<PathBuf>,
        /// `A,B`; repeatable. Default: every pair of models present.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        /// Comparison CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fractional-wins CSV.
        #[arg(long)]
        wins: Option<PathBuf>,
        /// Crossover CSV; needs `--graph-models`.
        #[arg(long, requires = "graph_models")]
        crossover: Option<PathBuf>,
        /// Models forming the graph group, comma separated.
        #[arg(long, value_delimiter = ',')]
        graph_models: Vec<String>,
    },
    /// Design-space CSV plus heatmap and winner-map SVGs per lattice size.
    Report {
        /// Diagnostics CSV from `generate` or `diagnose`.
        #[arg(long)]
        diagnostics: PathBuf,
        /// Results CSV from `evaluate`; repeatable. Enables the winner maps.
        #[arg(long = "results")]
        results: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    csmbench::par::init_workers(workers.max(1));

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}

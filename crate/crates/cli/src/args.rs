use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug, Clone)]
#[command(name = "heursched", version, about = "Learn and evaluate primal heuristic schedules")]
pub struct Cli {
    /// Where to write the run manifest (default: next to the output file).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build a greedy schedule from a dataset.
    Build(BuildArgs),
    /// Evaluate a schedule against a dataset.
    Eval(EvalArgs),
    /// Exhaustive optimum for small datasets.
    Exact(ExactArgs),
    /// Write the MIQP model of the scheduling problem.
    ExportMiqp(ExportArgs),
    /// Collect a shadow-mode dataset from simulated instances.
    Simulate(SimulateArgs),
    /// Run a schedule on one simulated instance.
    Run(RunArgs),
    /// Relative primal integral of a schedule against a baseline.
    Compare(CompareArgs),
    /// Primal integral of an incumbent timeline.
    Metrics(MetricsArgs),
    /// Train/test matrix of relative primal integrals across configs.
    Crossval(CrossvalArgs),
    /// Re-run a manifest and check that its outputs are reproduced.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Coverage level reported for the resulting schedule.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Weight iterations by average seconds per iteration.
    #[arg(long)]
    pub normalize: bool,
    /// Disable extending the last scheduled heuristic.
    #[arg(long)]
    pub no_extension: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub normalize: bool,
    /// Per-node outcomes as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExactArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 6)]
    pub max_heuristics: usize,
    #[arg(long, default_value_t = 8)]
    pub max_breakpoints: usize,
    #[arg(long, default_value_t = 20_000_000)]
    pub enumeration_budget: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExportArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Model file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's instance count.
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub time_limit: f64,
    /// Incumbent timeline as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Baseline schedule (default: config order, each heuristic at its cap).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Comma-separated seeds or a half-open range `a..b`.
    #[arg(long)]
    pub seeds: String,
    #[arg(long)]
    pub time_limit: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    #[arg(long)]
    pub timeline: PathBuf,
    #[arg(long)]
    pub best_known: f64,
    #[arg(long, default_value = "min")]
    pub sense: String,
    #[arg(long)]
    pub time_limit: f64,
}

#[derive(Args, Debug, Clone)]
pub struct CrossvalArgs {
    /// Simulator configs, comma-separated or repeated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub configs: Vec<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub path: PathBuf,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Twin-city processes on the torus: sampling, path solving and experiments.
#[derive(Debug, Parser)]
#[command(name = "twincity", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config; replaces the built-in default for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (`experiment.master_seed`).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(
        long,
        global = true,
        value_name = "DIR",
        env = "TWINCITY_OUT_DIR",
        default_value = "twincity-out"
    )]
    pub out: PathBuf,
    /// `experiment.metric`: euclidean, torus or free.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// `experiment.reps`.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// `experiment.n_values`, comma separated.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub n_values: Option<Vec<usize>>,
    /// Set any config key by dotted path, e.g. `experiment.spec.stages.0.epsilon=0.001`.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a segment of a process as JSON or CSV.
    Sample(SampleArgs),
    /// Solve a shortest-path instance.
    Tsp(TspArgs),
    /// Estimate the path-length ratio at each n.
    Beta,
    /// Ratio estimates at the dip and recovery checkpoints.
    Oscillate(OscillateArgs),
    /// Partition distance between consecutive stages.
    Closeness(ClosenessArgs),
    /// Rectangle discrepancy of a point sequence.
    Discrepancy(DiscrepancyArgs),
    /// Run the acceptance suite; exits 1 if any criterion fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// `sample.n`
    #[arg(long)]
    pub n: Option<usize>,
    /// `sample.stage`
    #[arg(long)]
    pub stage: Option<usize>,
    /// `sample.start`
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<i64>,
    /// `sample.draw_shifts`
    #[arg(long)]
    pub draw_shifts: bool,
    /// `sample.format`: json or csv.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct TspArgs {
    /// `tsp.instance`: JSON list of `[x, y]` or CSV with `x,y` columns.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// `experiment.solver.method`: brute, exact, heuristic or partition.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct OscillateArgs {
    /// `experiment.pin_shifts`
    #[arg(long)]
    pub pin_shifts: bool,
    /// `oscillate.calibrate_stages`
    #[arg(long)]
    pub calibrate_stages: Option<usize>,
    /// `oscillate.beta_hat`
    #[arg(long)]
    pub beta_hat: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClosenessArgs {
    /// `closeness.stage`
    #[arg(long)]
    pub stage: Option<usize>,
    /// `closeness.m`
    #[arg(long)]
    pub m: Option<usize>,
    /// `closeness.cells`
    #[arg(long)]
    pub cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiscrepancyArgs {
    /// `discrepancy.generator`: kronecker, iid or process.
    #[arg(long)]
    pub generator: Option<String>,
    /// `discrepancy.n`
    #[arg(long)]
    pub n: Option<usize>,
    /// `discrepancy.mode`: exact_anchored_grid or grid_approx.
    #[arg(long)]
    pub mode: Option<String>,
    /// `discrepancy.resolution`
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `verify.only`: run only these criteria.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub only: Option<Vec<usize>>,
}

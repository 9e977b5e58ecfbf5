use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use focal_core::sim::Mode;

use crate::seeds::SeedList;

#[derive(Debug, Parser)]
#[command(name = "focal-reward", version, about = "Focal reward synthesis, simulation and theory checks")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute base and focal rewards for one judged rollout group.
    Synthesize(SynthesizeArgs),
    /// Run the saturation simulator under one or more scalarizers.
    Simulate(SimulateArgs),
    /// Run the numerical theory checks and write a verification report.
    VerifyTheory(VerifyArgs),
    /// Outcome transitions, headroom quintiles and weight drift over groups.
    Analyze(AnalyzeArgs),
    /// Write a random judged group in the tensor file format.
    GenerateFixture(FixtureArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML experiment config; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also write a JSON report next to the CSV outputs.
    #[arg(long)]
    pub json_report: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthesisArgs {
    /// Strong-preference margin threshold.
    #[arg(long)]
    pub tau: Option<f64>,

    /// Gibbs temperature.
    #[arg(long)]
    pub temp: Option<f64>,

    /// Focusing exponent.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Headroom floor added before exponentiation.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Judged group in the tensor file format.
    #[arg(long)]
    pub tensor: PathBuf,

    /// Average repeated (i, j) records instead of rejecting them.
    #[arg(long)]
    pub average_duplicates: bool,

    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub synthesis: SynthesisArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scalarizer to run; repeat for several.
    #[arg(long = "mode", value_name = "static|focal|no-frontier|frozen")]
    pub modes: Vec<Mode>,

    /// Seeds as a list and/or inclusive ranges, e.g. `1..20` or `1,4,9`.
    #[arg(long)]
    pub seeds: Option<SeedList>,

    /// Training steps per run.
    #[arg(long)]
    pub steps: Option<usize>,

    /// Rollouts per group.
    #[arg(long)]
    pub group_size: Option<usize>,

    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub synthesis: SynthesisArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Master seed for all randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Monte-Carlo samples per misallocation instance.
    #[arg(long)]
    pub mc_samples: Option<u64>,

    /// Random misallocation instances.
    #[arg(long)]
    pub mc_instances: Option<usize>,

    /// Random headroom models for the gap identity.
    #[arg(long)]
    pub gap_models: Option<usize>,

    /// Random directions per sphere search.
    #[arg(long)]
    pub sphere_dirs: Option<usize>,

    /// Random frontier instances.
    #[arg(long)]
    pub gibbs_instances: Option<usize>,

    /// Random tensors for the shift probe.
    #[arg(long)]
    pub shift_tensors: Option<usize>,

    /// Random draws for the conservation, mass and temperature checks.
    #[arg(long)]
    pub draws: Option<usize>,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Judged groups to analyze; repeat for several.
    #[arg(long = "tensor", required = true)]
    pub tensors: Vec<PathBuf>,

    /// Average repeated (i, j) records instead of rejecting them.
    #[arg(long)]
    pub average_duplicates: bool,

    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub synthesis: SynthesisArgs,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 4)]
    pub group_size: usize,

    /// Number of criteria.
    #[arg(long, default_value_t = 4)]
    pub criteria: usize,

    /// How many of the criteria are hard rules (listed first).
    #[arg(long, default_value_t = 1)]
    pub hard_rules: usize,

    #[arg(long, default_value_t = focal_core::rubric::DEFAULT_S_MAX)]
    pub s_max: f64,

    #[arg(long, default_value = "fixture")]
    pub group_id: String,
}

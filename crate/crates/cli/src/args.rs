use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrw_bandit::Variant;

#[derive(Debug, Parser)]
#[command(name = "mrw-bandit", version, about = "Multi-scale random walk adversary for bandits with switching costs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a loss sequence (and its walk) and write it to CSV.
    Generate(GenerateArgs),
    /// Play one policy against one loss sequence.
    Play(PlayArgs),
    /// Run every policy over a grid of horizons and fit scaling exponents.
    Sweep(SweepArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
    /// Render a results, plot-data or trajectory CSV as SVG.
    Plot(PlotArgs),
}

/// Adversary flags; each overrides the corresponding config value.
#[derive(Debug, Args, Default)]
pub struct AdversaryArgs {
    /// Horizon T (first entry of `adversary.horizons` in a config).
    #[arg(long = "T", visible_alias = "horizon", value_name = "T")]
    pub horizon: Option<u64>,
    /// Number of arms k.
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Switching cost c.
    #[arg(long, value_name = "C")]
    pub c: Option<f64>,
    /// `clipped` or `binary`.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Override the gap ε (testing only).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Override the walk scale σ (testing only).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Override the best arm χ, 1-based (testing only).
    #[arg(long)]
    pub chi: Option<usize>,
    /// Override the baseline 1/2 (testing only).
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Adversary seed (a config's `seed_base` when omitted).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub adversary: AdversaryArgs,
    /// Experiment config to take adversary settings from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip `trajectory.csv`.
    #[arg(long)]
    pub no_trajectory: bool,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    /// Policy spec, e.g. `exp3:auto`, `betc:tau=auto`, `etc:rpa=8`, `const:1`.
    #[arg(long)]
    pub policy: String,
    /// Loss CSV written by `generate`; otherwise the sequence is generated inline.
    #[arg(long, conflicts_with_all = ["horizon", "k", "variant", "epsilon", "sigma", "chi", "baseline", "seed", "config"])]
    pub losses: Option<PathBuf>,
    #[command(flatten)]
    pub adversary: AdversaryArgs,
    /// Experiment config to take adversary settings from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub policy_seed: u64,
    /// Treat arm 1 as the action before round 1.
    #[arg(long)]
    pub first_round_free: bool,
    /// Also write the action trace.
    #[arg(long)]
    pub trace: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override `seed_base`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override `trials`.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Override the policy list (repeatable).
    #[arg(long = "policy")]
    pub policies: Vec<String>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyLevel {
    /// Exact checks for T ≤ 2^12.
    Quick,
    /// Exact checks for T ≤ 2^16 plus the statistical suites.
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = VerifyLevel::Quick)]
    pub level: VerifyLevel,
    /// Seed for the statistical suites.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Check a deliberately corrupted parent function instead.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    #[value(name = "regret-vs-T")]
    RegretVsT,
    #[value(name = "switches-vs-T")]
    SwitchesVsT,
    Trajectory,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// `results.csv`, `plot_data.csv` or `trajectory.csv`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// SVG to write (default: `<kind>.svg` in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

//! Command-line surface. Every command's arguments serialize into its
//! manifest so a run can be replayed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covertkey_core::sim::{Decoder, UserSizes};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "covertkey",
    version,
    about = "Covert secret-key region bounds and coding simulations"
)]
pub struct Cli {
    /// Directory for output files; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Inner and outer covert secret-key regions over a weight grid.
    RegionCsk(RegionCskArgs),
    /// Inner and outer wiretap secret-key regions over product Bernoulli inputs.
    RegionWsk(RegionWskArgs),
    /// First-order expansion residuals over a list of amplitudes.
    VerifyExpansions(VerifyArgs),
    /// Sample codebooks and measure error, secrecy, source and covertness metrics.
    Simulate(SimulateArgs),
    /// Evaluate the finite-length reliability and resolvability bounds.
    Bounds(BoundsArgs),
    /// Write the two reference channel files and the worked example outputs.
    Examples(ExamplesArgs),
    /// Re-run a command from its manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ChannelArg {
    /// Channel pair JSON file.
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RegionCskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArg,
    /// Number of weight splits `rho1` in the grid.
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Smallest `rho1` in the grid.
    #[arg(long, default_value_t = 0.001)]
    pub rho_min: f64,
    /// Largest `rho1` in the grid.
    #[arg(long, default_value_t = 0.999)]
    pub rho_max: f64,
    /// Evenly spaced envelope samples written for plotting.
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RegionWskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArg,
    /// Bernoulli parameters per user; the sweep covers `grid x grid` input laws.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArg,
    /// Weight of user 1; user 2 gets `1 - rho`.
    #[arg(long, default_value_t = 0.28)]
    pub rho: f64,
    /// Amplitudes to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    pub alpha: Vec<f64>,
    /// Largest accepted max/min ratio of a scaled residual across amplitudes.
    #[arg(long, default_value_t = 4.0)]
    pub max_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderArg {
    KeyPosterior,
    JointMl,
}

impl From<DecoderArg> for Decoder {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::KeyPosterior => Decoder::KeyPosterior,
            DecoderArg::JointMl => Decoder::JointMl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exact,
    MonteCarlo,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Auxiliary,
    Protocol,
    Both,
}

/// Shared code parameters of `simulate` and `bounds`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArg,
    /// Weight of user 1; user 2 gets `1 - rho`.
    #[arg(long, default_value_t = 0.28)]
    pub rho: f64,
    /// Amplitude; defaults to `1 / (log2(n) sqrt(n))`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Block length.
    #[arg(short, long, default_value_t = 4)]
    pub n: usize,
    /// Reliability slack.
    #[arg(long, default_value_t = 0.1)]
    pub mu1: f64,
    /// Resolvability slack.
    #[arg(long, default_value_t = 0.1)]
    pub mu2: f64,
    /// Source-simulation slack.
    #[arg(long, default_value_t = 0.1)]
    pub mu3: f64,
    /// Fixed sizes `G,M,N` for both users instead of planning them.
    #[arg(long, value_parser = parse_sizes)]
    pub sizes: Option<SizesArg>,
    /// Fixed sizes for user 2 when they differ from `--sizes`.
    #[arg(long, value_parser = parse_sizes, requires = "sizes")]
    pub sizes2: Option<SizesArg>,
    /// Use the planned sizes even when rounding breaks a constraint.
    #[arg(long)]
    pub allow_infeasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizesArg {
    pub public: u64,
    pub key: u64,
    pub randomness: u64,
}

impl From<SizesArg> for UserSizes {
    fn from(s: SizesArg) -> Self {
        UserSizes::new(s.public, s.key, s.randomness)
    }
}

fn parse_sizes(s: &str) -> Result<SizesArg, String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[public, key, randomness] if public > 0 && key > 0 && randomness > 0 => Ok(SizesArg {
            public,
            key,
            randomness,
        }),
        _ => Err("expected three positive integers G,M,N".into()),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Seed for codebooks and trials; drawn from system entropy when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = DecoderArg::KeyPosterior)]
    pub decoder: DecoderArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SchemeArg::Both)]
    pub scheme: SchemeArg,
    /// Run a decay study over these block lengths instead of a single code.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExamplesArgs {}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

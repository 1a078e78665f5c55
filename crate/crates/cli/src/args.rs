//! Argument definitions.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pktsched", version, about = "Online packet scheduling with deadlines: simulations and studies")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file of flags; flags on the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance in the text format
    Gen(GenCmd),
    /// Run one policy on one instance
    Run(RunCmd),
    /// Sample parameter combinations and compare policies with the offline optimum
    Batch(BatchCmd),
    /// Measure how often the heaviest packet is worth less than 1/1.618 of the earliest one
    Psi(PsiCmd),
    /// Pass packets through a chain of nodes
    Tandem(TandemCmd),
    /// Buffer size needed by MG for a target overflow fraction
    Buffersize(BufferCmd),
    /// Throughputs of MLP, MG and the offline optimum on the two-step hard instance
    Hardinstance(HardCmd),
}

/// Inclusive range written `lo:hi`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span<T>(pub T, pub T);

impl<T: FromStr + Copy> FromStr for Span<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let one = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad value {v:?}"));
        match s.split_once(':') {
            Some((lo, hi)) => Ok(Span(one(lo)?, one(hi)?)),
            None => {
                let v = one(s)?;
                Ok(Span(v, v))
            }
        }
    }
}

impl<T: fmt::Display + PartialEq> fmt::Display for Span<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == self.1 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}:{}", self.0, self.1)
        }
    }
}

/// Parameters of one generated instance.
#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Measured arrival steps
    #[arg(long = "T", default_value_t = 200)]
    pub steps: u32,
    /// Mean arrivals per step
    #[arg(long, default_value_t = 5.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 20)]
    pub wmax: u32,
    #[arg(long, default_value_t = 20)]
    pub dmax: u32,
    /// Slack model: 1 (uniform on 0..=dmax) or 2 (bimodal)
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub model: u8,
    /// Probability of the short mode under model 2
    #[arg(long, default_value_t = 0.85)]
    pub p: f64,
    /// Warm-up steps ahead of the measured ones; `auto` is max(40, ceil(0.4 T))
    #[arg(long, default_value = "0")]
    pub kappa: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sort deadlines into arrival order
    #[arg(long)]
    pub agreeable: bool,
    /// Multiply each weight by its deadline
    #[arg(long)]
    pub scenario1: bool,
}

#[derive(Debug, Args)]
pub struct GenCmd {
    #[command(flatten)]
    pub gen: GenArgs,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Policy as `kind[:key=value,...]`, refined by the individual flags.
#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// mg, greedy, edf, mlp, mm, lmg or smmg, optionally with `:key=value,...`
    #[arg(long, default_value = "mg")]
    pub policy: String,
    /// Divisor of MG, LMG (initial) and SMMG
    #[arg(long)]
    pub phi: Option<f64>,
    /// MM occupancy threshold
    #[arg(long)]
    pub nbar: Option<f64>,
    /// EDF-α factor, or LMG smoothing weight
    #[arg(long)]
    pub alpha: Option<f64>,
    /// LMG epoch length, or `auto`
    #[arg(long)]
    pub epoch: Option<String>,
    /// SMMG fraction of the maximum weight
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Read the instance from this file instead of generating one
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Last simulated step
    #[arg(long)]
    pub t_end: Option<i64>,
    /// Measurement window `first:last`
    #[arg(long)]
    pub window: Option<Span<i64>>,
    /// Offline optimum: `full` optimizes over the whole run, `window` over the window slots
    #[arg(long, default_value = "full")]
    pub offline: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchCmd {
    /// plain, S1, S2, S3 or MOD; presets fill in ranges and policies
    #[arg(long, default_value = "plain")]
    pub scenario: String,
    #[arg(long = "T")]
    pub steps: Option<Span<u32>>,
    #[arg(long)]
    pub lambda: Option<Span<f64>>,
    #[arg(long)]
    pub wmax: Option<Span<u32>>,
    #[arg(long)]
    pub dmax: Option<Span<u32>>,
    #[arg(long)]
    pub p: Option<Span<f64>>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub model: Option<u8>,
    /// Parameter combinations to sample
    #[arg(long)]
    pub combos: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// `literal` runs each combination's instance once; `fresh` draws a new instance per repetition
    #[arg(long)]
    pub rep_mode: Option<String>,
    /// Repeat for several policies; the first one supplies n̄
    #[arg(long = "policy")]
    pub policies: Vec<String>,
    #[arg(long)]
    pub offline: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Also write scatter plots
    #[arg(long)]
    pub svg: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PsiCmd {
    #[arg(long = "T", default_value = "200")]
    pub steps: Span<u32>,
    #[arg(long, default_value = "0.7:20")]
    pub lambda: Span<f64>,
    #[arg(long, default_value = "1:20")]
    pub wmax: Span<u32>,
    #[arg(long, default_value = "1:40")]
    pub dmax: Span<u32>,
    #[arg(long, default_value_t = 8000)]
    pub combos: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Cell key: wmax-dmax, wmax, dmax or combination
    #[arg(long, default_value = "wmax-dmax")]
    pub group_by: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TandemCmd {
    #[command(flatten)]
    pub gen: GenArgs,
    /// Nodes including the sink
    #[arg(long, default_value_t = 3)]
    pub nodes: usize,
    /// Policy at every sending node
    #[arg(long, default_value = "mg")]
    pub policy: String,
    /// Override for one node as `k=SPEC` (nodes numbered from 1)
    #[arg(long = "node-policy")]
    pub node_policies: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BufferCmd {
    /// Arrival rates, comma separated
    #[arg(long, default_value = "2,10,50,100", value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Tolerated fraction of steps above the buffer size
    #[arg(long, default_value_t = 1e-6)]
    pub target: f64,
    /// Steps simulated per rate; defaults to ceil(10 / target)
    #[arg(long)]
    pub run_length: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub wmax: u32,
    #[arg(long, default_value_t = 20)]
    pub dmax: u32,
    #[arg(long, default_value_t = pktsched::policies::GOLDEN_RATIO)]
    pub phi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HardCmd {
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 100.0)]
    pub w2: f64,
}

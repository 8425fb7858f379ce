use std::path::PathBuf;

use bcclace::checks::LemmaId;
use bcclace::{Mode, Policy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Clone)]
#[command(name = "bcclace", version, about = "Bootstrap bound chain for oriented percolation on the BCC lattice")]
pub struct Cli {
    /// Rounding policy for every computed bound.
    #[arg(long, global = true, value_enum, default_value_t = PolicyArg::Certified)]
    pub policy: PolicyArg,
    /// Directory for report files and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Random-walk quantities eps1, eps2 for a range of dimensions.
    RwTable(RwTableArgs),
    /// Evaluate the bound chain at one dimension and constant triple.
    Verify(VerifyArgs),
    /// Grid search over constant triples.
    Search(SearchArgs),
    /// Numerical certification of the auxiliary inequalities.
    Validate(ValidateArgs),
    /// Monte Carlo for oriented percolation, with optional oracle comparisons.
    Simulate(SimulateArgs),
    /// Re-run a recorded manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RwTable(_) => "rw-table",
            Command::Verify(_) => "verify",
            Command::Search(_) => "search",
            Command::Validate(_) => "validate",
            Command::Simulate(_) => "simulate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Certified,
    Fast,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Certified => Policy::Certified,
            PolicyArg::Fast => Policy::Fast,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RwTableArgs {
    #[arg(long, default_value_t = 3)]
    pub d_min: u32,
    #[arg(long, default_value_t = 10)]
    pub d_max: u32,
    #[arg(long, default_value_t = 2)]
    pub nu_max: u32,
    /// Number of exactly summed terms before the tail bound.
    #[arg(long, short = 'n', default_value_t = bcclace::DEFAULT_TRUNCATION)]
    pub truncation: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Chained,
    PaperReplay,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Chained => Mode::Chained,
            ModeArg::PaperReplay => Mode::PaperReplay,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long, short = 'd')]
    pub dim: u32,
    #[arg(long, default_value_t = 1.002)]
    pub k1: f64,
    #[arg(long, default_value_t = 1.05)]
    pub k2: f64,
    #[arg(long, default_value_t = 1.25)]
    pub k3: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Chained)]
    pub mode: ModeArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointFilter {
    All,
    Pass,
    None,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SearchArgs {
    /// Key-value spec file (d_min, d_max, k1_lo, k1_hi, k1_n, ... k3_n).
    #[arg(required_unless_present = "reference", conflicts_with = "reference")]
    pub spec: Option<PathBuf>,
    /// Use the reference grid (1,1.1] x (1,1.1] x (1,1.3] with 100 divisions.
    #[arg(long)]
    pub reference: bool,
    #[arg(long, default_value_t = 8, requires = "reference")]
    pub d_min: u32,
    #[arg(long, default_value_t = 9, requires = "reference")]
    pub d_max: u32,
    /// Evaluate every point instead of stopping at the first pass per dimension.
    #[arg(long)]
    pub exhaustive: bool,
    /// Which evaluated points go to points.jsonl.
    #[arg(long, value_enum, default_value_t = PointFilter::Pass)]
    pub points: PointFilter,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaSelector {
    All,
    GreenLower,
    MuBound,
    D2k,
    CosineTelescope,
    DoubleDerivative,
}

impl LemmaSelector {
    pub fn lemmas(self) -> Vec<LemmaId> {
        match self {
            LemmaSelector::All => LemmaId::ALL.to_vec(),
            LemmaSelector::GreenLower => vec![LemmaId::GreenLower],
            LemmaSelector::MuBound => vec![LemmaId::MuBound],
            LemmaSelector::D2k => vec![LemmaId::D2k],
            LemmaSelector::CosineTelescope => vec![LemmaId::CosineTelescope],
            LemmaSelector::DoubleDerivative => vec![LemmaId::DoubleDerivative],
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub lemma: LemmaSelector,
    /// Points per axis for grid checks.
    #[arg(long, default_value_t = 101)]
    pub grid: u32,
    /// Dimension for the d2k check; all of 1..=9 when omitted.
    #[arg(long)]
    pub dim: Option<u32>,
    /// Largest d2k dimension checked on the full grid; larger ones are sampled.
    #[arg(long, default_value_t = 3)]
    pub full_grid_max_dim: u32,
    /// Quasi-random samples per sampled d2k dimension.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Trials for the cosine check.
    #[arg(long, default_value_t = 1_000_000)]
    pub cosine_trials: u64,
    #[arg(long, default_value_t = 8)]
    pub j_max: u32,
    /// Random test sequences for the second-difference check.
    #[arg(long, default_value_t = 10_000)]
    pub sequences: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long, short = 'd')]
    pub dim: u32,
    /// Model parameter p; bonds are open with probability p 2^-d.
    #[arg(long, short = 'p', conflicts_with = "q", required_unless_present = "q")]
    pub p: Option<f64>,
    /// Per-bond probability q = p 2^-d.
    #[arg(long, short = 'q')]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub t_max: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Abandon trials whose frontier exceeds this many sites.
    #[arg(long)]
    pub site_budget: Option<usize>,
    /// Compare against the exact oracles and exit 1 on disagreement.
    #[arg(long)]
    pub oracle: bool,
    /// Paired trials for the monotone-coupling check in oracle mode.
    #[arg(long, default_value_t = 1000)]
    pub coupling_pairs: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
}

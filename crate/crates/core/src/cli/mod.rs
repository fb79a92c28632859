//! Command-line front end. Every command writes one CSV report headed by a
//! `# {json}` manifest line.
//!
//! Exit codes: 0 when every requested check holds, 1 when some bound is
//! violated, 2 on usage or input errors.

mod commands;
pub mod output;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::TailSide;
pub use crate::estimators::EstimatorKind;
use crate::experiments::OccupancyModel;
use crate::losses::Metric;
use crate::mc::{McEngine, Workers};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "poissonization", version, about = "Poissonization laboratory: occupancy counterexample, histogram risk, Besov norms and bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Occupancy shortfall and Bayes risk of the interval-selection problem.
    Counterexample(CounterexampleArgs),
    /// Monte Carlo risk of the thresholded histogram estimator.
    EstimatorRisk(EstimatorRiskArgs),
    /// Besov norm and approximation-error bounds of a dyadic function.
    Besov(BesovArgs),
    /// Deficiency and tail bound checks.
    Bounds(BoundsArgs),
    /// Poisson tail probabilities against exp(-m0^3/(m0+lambda)^2).
    Tail(TailArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Base seed of the replication streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; `-` writes to standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
    /// Worker threads (0 = all available, 1 = serial). Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
}

impl CommonArgs {
    pub fn engine(&self) -> McEngine {
        McEngine::new(Workers::from_count(self.threads))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CounterexampleArgs {
    /// Grid sizes, comma separated (each at least 100).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 0.6)]
    pub beta: f64,
    /// Monte Carlo replications where no exact computation is available.
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    /// Also run Monte Carlo when an exact value exists.
    #[arg(long)]
    pub mc_check: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [OccupancyModel::Iid, OccupancyModel::Poisson])]
    pub model: Vec<OccupancyModel>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimatorRiskArgs {
    /// Built-in densities (uniform, halfstep, tent, withzero) or grid-function files.
    #[arg(long, value_delimiter = ',', default_values_t = ["uniform".to_string(), "tent".to_string(), "withzero".to_string()])]
    pub density: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = Metric::Ln)]
    pub metric: Metric,
    #[arg(long, default_value_t = OccupancyModel::Poisson)]
    pub model: OccupancyModel,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Threshold)]
    pub estimator: EstimatorKind,
    #[arg(long, default_value_t = 200)]
    pub reps: u64,
    /// Resolution that built-in densities are projected to.
    #[arg(long, default_value_t = 1024)]
    pub resolution: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BesovArgs {
    /// Built-in density name or grid-function file (dyadic resolution).
    #[arg(long, default_value = "uniform")]
    pub function: String,
    /// Resolution for built-in densities.
    #[arg(long, default_value_t = 1024)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Ball radius M for the membership column (default: the computed norm).
    #[arg(long)]
    pub m_ball: Option<f64>,
    /// Dyadic approximation levels k (default: 2, 4, …, resolution).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundCheck {
    /// sqrt(8 r beta_n) for r additional observations.
    Eq1,
    /// m/sqrt(2n) between Poisson experiments with means n and n+m.
    Pair,
    /// Superposition Hellinger bound, with m = ceil(D sqrt n).
    Superposition,
    /// 2 D sqrt(c_n) neighborhood bound.
    Lemma3,
    /// P(Poisson(n + ceil(D sqrt n)) <= n-1) <= 2/D^2.
    Lemma2,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// Checks to run (default: all).
    #[arg(value_enum)]
    pub checks: Vec<BoundCheck>,
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 1000.0, 10000.0])]
    pub n: Vec<f64>,
    /// Extra expected observations for `pair`.
    #[arg(long, value_delimiter = ',', default_values_t = [20.0])]
    pub m: Vec<f64>,
    /// D values (defaults: 1,2,5,10 for lemma2; 1,3 for superposition; 2 for lemma3).
    #[arg(long = "d", value_delimiter = ',')]
    pub d: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 4.0])]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.02])]
    pub beta_n: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01])]
    pub c_n: Vec<f64>,
    /// Density f of the superposition check.
    #[arg(long, default_value = "uniform")]
    pub density: String,
    /// Density f0 of the superposition check.
    #[arg(long, default_value = "halfstep")]
    pub density0: String,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Additional seeded random density pairs for the superposition check.
    #[arg(long, default_value_t = 0)]
    pub random_pairs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TailArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0, 10000.0])]
    pub lambda: Vec<f64>,
    /// Distances m0 (default: 1, 2, …, ceil(10 sqrt lambda) for each lambda).
    #[arg(long, value_delimiter = ',')]
    pub m0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_values_t = [TailSide::Upper, TailSide::Lower, TailSide::TwoSided])]
    pub side: Vec<TailSide>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli.command) {
        Ok(0) => EXIT_OK,
        Ok(violations) => {
            eprintln!("{violations} bound check(s) violated");
            EXIT_VIOLATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

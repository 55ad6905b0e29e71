use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "hazard-dantzig", version, about = "Dantzig selector for the Cox proportional hazards model")]
pub struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "HAZARD_DANTZIG_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Simulate a survival dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit the estimator to a CSV dataset.
    Fit(FitArgs),
    /// Cone-restricted factors of a matrix or a population surrogate.
    Factors(FactorsArgs),
    /// Monte Carlo tail probability of the score at the truth.
    Tail(TailArgs),
    /// Evaluate the error bounds for given inputs.
    Bounds(BoundsArgs),
    /// Run a full simulate / fit / bound experiment.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// JSON simulation config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nonzero coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta0: Option<Vec<f64>>,
    #[arg(long)]
    pub censor_rate: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, conflicts_with = "k2")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 50)]
    pub max_outer: usize,
    /// Outer-loop tolerance on successive iterates.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FactorsArgs {
    /// Matrix as dense CSV or JSON array of rows.
    #[arg(long, required_unless_present = "population")]
    pub matrix: Option<PathBuf>,
    /// Simulation config whose population surrogate is used instead.
    #[arg(long, conflicts_with = "matrix")]
    pub population: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    pub n_big: usize,
    #[arg(long, default_value_t = 4)]
    pub mc_reps: usize,
    /// 1-based support indices; defaults to the first S coordinates of the
    /// population config.
    #[arg(long, value_delimiter = ',')]
    pub support: Option<Vec<usize>>,
    /// Registered factor names (kappa, re, phi2s, f<q>); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub factor: Option<Vec<String>>,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    pub oracle_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample subsets for the restricted constants instead of enumerating.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TailArgs {
    /// JSON simulation config.
    #[arg(long)]
    pub config: PathBuf,
    /// Sample sizes, comma separated; defaults to the config's n.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, conflicts_with = "k2")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Simulation config from which K3, K4, K5 are derived.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub re: f64,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub fq: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

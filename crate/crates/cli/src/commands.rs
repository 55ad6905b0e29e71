use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hazard_dantzig::bounds::{
    constants_from_truth, run_experiment, score_sup_norms, tail_bound, theorem44_bound, theorem45_bounds,
    BoundValue, ExperimentConfig, ProofConstants, TailBound, TailEstimate, Theorem45Bounds,
};
use hazard_dantzig::dantzig::{gamma_schedule, solve_dsfph, SolverConfig};
use hazard_dantzig::factors::{
    factor_report, load_matrix, population_matrix, EnumerationMode, FactorEstimate, FactorOptions, FactorRegistry,
    FactorReport, ReportRequest, SupportSet, ENUMERATION_BUDGET,
};
use hazard_dantzig::survival_sim::{load_csv, write_csv, Baseline, CovariateLaw, SimConfig};
use hazard_dantzig::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{BoundsArgs, Command, ExperimentArgs, FactorsArgs, FitArgs, SimulateArgs, TailArgs};
use crate::output::{manifest_path_for, write_atomic, write_json, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Errors caused by bad input rather than by a failed computation.
pub fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::Dimension(_)
            | Error::NotSymmetric(_)
            | Error::EnumerationBudget { .. }
            | Error::Csv(_)
            | Error::Json(_)
    )
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Replay(args) => {
            let manifest: RunManifest = read_json(&args.manifest)?;
            run_resolved(&manifest.invocation, manifest.config)
        }
        other => {
            let config = resolve(other)?;
            run_resolved(other, config)
        }
    }
}

/// Turns command-line flags into the full configuration recorded in the
/// manifest.
fn resolve(command: &Command) -> CliResult<serde_json::Value> {
    Ok(match command {
        Command::Simulate(a) => serde_json::to_value(resolve_simulate(a)?)?,
        Command::Fit(a) => serde_json::to_value(resolve_fit(a)?)?,
        Command::Factors(a) => serde_json::to_value(resolve_factors(a)?)?,
        Command::Tail(a) => serde_json::to_value(resolve_tail(a)?)?,
        Command::Bounds(a) => serde_json::to_value(resolve_bounds(a)?)?,
        Command::Experiment(a) => serde_json::to_value(resolve_experiment(a)?)?,
        Command::Replay(_) => unreachable!("replay is resolved from its manifest"),
    })
}

fn run_resolved(command: &Command, config: serde_json::Value) -> CliResult<()> {
    let start = Instant::now();
    let manifest = RunManifest::new(command, config.clone(), Vec::new());
    let (manifest_path, seeds, outputs) = match command {
        Command::Simulate(a) => {
            let cfg: SimConfig = serde_json::from_value(config)?;
            (manifest_path_for(&a.out), vec![cfg.seed], run_simulate(&cfg, &a.out)?)
        }
        Command::Fit(a) => {
            let cfg: FitConfig = serde_json::from_value(config)?;
            (manifest_path_for(&a.out), Vec::new(), run_fit(&cfg, &a.out)?)
        }
        Command::Factors(a) => {
            let cfg: FactorsConfig = serde_json::from_value(config)?;
            let mut seeds = vec![cfg.options.seed];
            seeds.extend(cfg.population.as_ref().map(|p| p.seed));
            (manifest_path_for(&a.out), seeds, run_factors(&cfg, &a.out)?)
        }
        Command::Tail(a) => {
            let cfg: TailConfig = serde_json::from_value(config)?;
            (manifest_path_for(&a.out), vec![cfg.sim.seed], run_tail(&cfg, &a.out)?)
        }
        Command::Bounds(a) => {
            let cfg: BoundsConfig = serde_json::from_value(config)?;
            (manifest_path_for(&a.out), Vec::new(), run_bounds(&cfg, &a.out)?)
        }
        Command::Experiment(a) => {
            let cfg: ExperimentConfig = serde_json::from_value(config)?;
            (a.out.join("manifest.json"), vec![cfg.seed], run_experiment_cmd(&cfg, &a.out)?)
        }
        Command::Replay(_) => return Err(CliError::Usage("a manifest cannot record a replay".into())),
    };
    let manifest = RunManifest { seeds, ..manifest }.finish(start.elapsed(), outputs);
    write_json(&manifest_path, &manifest)?;
    Ok(())
}

fn resolve_simulate(a: &SimulateArgs) -> CliResult<SimConfig> {
    let mut cfg = match &a.config {
        Some(path) => read_json::<SimConfig>(path)?,
        None => {
            let missing: Vec<&str> = [("--n", a.n.is_none()), ("--p", a.p.is_none()), ("--s", a.s.is_none())]
                .into_iter()
                .filter_map(|(name, absent)| absent.then_some(name))
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Usage(format!(
                    "simulate needs {} (or --config)",
                    missing.join(", ")
                )));
            }
            if a.seed.is_none() {
                return Err(CliError::Usage("simulate needs --seed (or --config)".into()));
            }
            let s = a.s.unwrap_or(1);
            SimConfig {
                n: 0,
                p: 0,
                s,
                beta0_values: vec![1.0; s],
                baseline: Baseline::Constant { rate: 1.0 },
                censor_rate: 0.2,
                covariate_law: CovariateLaw::Uniform { half_width: 1.0 },
                k1: 1.01,
                tau: 10.0,
                seed: 0,
            }
        }
    };
    if let Some(s) = a.s {
        if s != cfg.s && a.beta0.is_none() {
            cfg.beta0_values = vec![1.0; s];
        }
        cfg.s = s;
    }
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.p = a.p.unwrap_or(cfg.p);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if let Some(b) = &a.beta0 {
        cfg.beta0_values = b.clone();
    }
    cfg.censor_rate = a.censor_rate.unwrap_or(cfg.censor_rate);
    cfg.k1 = a.k1.unwrap_or(cfg.k1);
    cfg.tau = a.tau.unwrap_or(cfg.tau);
    cfg.validate()?;
    Ok(cfg)
}

fn run_simulate(cfg: &SimConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let data = hazard_dantzig::survival_sim::simulate_dataset(cfg)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf)?;
    write_atomic(out, &buf)?;
    Ok(vec![out.to_path_buf()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FitConfig {
    data: PathBuf,
    k2: Option<f64>,
    alpha: f64,
    solver: SolverConfig,
}

fn resolve_fit(a: &FitArgs) -> CliResult<FitConfig> {
    let data = load_csv(&a.data)?;
    let gamma = match (a.gamma, a.k2) {
        (Some(g), None) => g,
        (None, Some(k2)) => gamma_schedule(data.n(), data.p, k2, a.alpha)?,
        _ => return Err(CliError::Usage("fit needs exactly one of --gamma or --k2".into())),
    };
    let solver = SolverConfig {
        gamma,
        max_outer: a.max_outer,
        outer_tol: a.tol,
        ..SolverConfig::default()
    };
    solver.validate()?;
    Ok(FitConfig {
        data: a.data.clone(),
        k2: a.k2,
        alpha: a.alpha,
        solver,
    })
}

fn run_fit(cfg: &FitConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let data = load_csv(&cfg.data)?;
    let fit = solve_dsfph(&data, &cfg.solver)?;
    write_json(out, &fit)?;
    Ok(vec![out.to_path_buf()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorsConfig {
    matrix: Option<PathBuf>,
    population: Option<SimConfig>,
    n_big: usize,
    mc_reps: usize,
    /// 1-based.
    support: Vec<usize>,
    factors: Option<Vec<String>>,
    options: FactorOptions,
    enumeration: EnumerationMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PopulationMeta {
    n_used: usize,
    mc_reps: usize,
    stderr_sup: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorsOutput {
    /// 1-based.
    support: Vec<usize>,
    report: Option<FactorReport>,
    estimates: Option<Vec<FactorEstimate>>,
    population: Option<PopulationMeta>,
}

fn resolve_factors(a: &FactorsArgs) -> CliResult<FactorsConfig> {
    let population = a.population.as_deref().map(read_json::<SimConfig>).transpose()?;
    let support = match (&a.support, &population) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => (1..=p.s).collect(),
        (None, None) => return Err(CliError::Usage("factors needs --support with --matrix".into())),
    };
    let options = FactorOptions {
        restarts: a.restarts,
        oracle_samples: a.oracle_samples,
        seed: a.seed,
        ..FactorOptions::default()
    };
    let enumeration = if a.sampled {
        EnumerationMode::Sampled {
            budget: ENUMERATION_BUDGET,
            samples: ENUMERATION_BUDGET,
            seed: a.seed,
        }
    } else {
        EnumerationMode::default()
    };
    if let Some(names) = &a.factor {
        let mut reg = FactorRegistry::with_defaults();
        for n in names {
            reg.resolve(n)?;
        }
    }
    Ok(FactorsConfig {
        matrix: a.matrix.clone(),
        population,
        n_big: a.n_big,
        mc_reps: a.mc_reps,
        support,
        factors: a.factor.clone(),
        options,
        enumeration,
    })
}

fn run_factors(cfg: &FactorsConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let (matrix, population) = match (&cfg.matrix, &cfg.population) {
        (Some(path), _) => (load_matrix(path)?, None),
        (None, Some(sim)) => {
            let pop = population_matrix(sim, &sim.beta0(), cfg.n_big, cfg.mc_reps)?;
            let meta = PopulationMeta {
                n_used: pop.n_used,
                mc_reps: pop.mc_reps,
                stderr_sup: pop.stderr_sup,
            };
            (pop.matrix, Some(meta))
        }
        (None, None) => return Err(CliError::Usage("factors needs --matrix or --population".into())),
    };
    let support = SupportSet::from_one_based(&cfg.support, matrix.nrows())?;
    let (report, estimates) = match &cfg.factors {
        None => {
            let request = ReportRequest {
                phi_2s: 2 * support.len() <= matrix.nrows(),
                enumeration: cfg.enumeration,
                ..ReportRequest::default()
            };
            (Some(factor_report(&matrix, &support, &cfg.options, &request)?), None)
        }
        Some(names) => {
            let mut reg = FactorRegistry::with_defaults();
            let mut est = Vec::new();
            for name in names {
                est.push(reg.resolve(name)?.compute(&matrix, &support, &cfg.options)?);
            }
            (None, Some(est))
        }
    };
    let output = FactorsOutput {
        support: cfg.support.clone(),
        report,
        estimates,
        population,
    };
    write_json(out, &output)?;
    Ok(vec![out.to_path_buf()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TailConfig {
    sim: SimConfig,
    n_grid: Vec<usize>,
    gamma: Option<f64>,
    k2: Option<f64>,
    alpha: f64,
    reps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TailRow {
    n: usize,
    estimate: TailEstimate,
    bound: TailBound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TailOutput {
    constants: ProofConstants,
    rows: Vec<TailRow>,
}

fn resolve_tail(a: &TailArgs) -> CliResult<TailConfig> {
    let sim: SimConfig = read_json(&a.config)?;
    sim.validate()?;
    if a.gamma.is_none() == a.k2.is_none() {
        return Err(CliError::Usage("tail needs exactly one of --gamma or --k2".into()));
    }
    if a.reps < 100 {
        return Err(CliError::Usage(format!("tail needs --reps >= 100, got {}", a.reps)));
    }
    let n_grid = a.n.clone().unwrap_or_else(|| vec![sim.n]);
    if let Some(k2) = a.k2 {
        gamma_schedule(n_grid[0], sim.p, k2, a.alpha)?;
    }
    Ok(TailConfig {
        sim,
        n_grid,
        gamma: a.gamma,
        k2: a.k2,
        alpha: a.alpha,
        reps: a.reps,
    })
}

fn run_tail(cfg: &TailConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let constants = constants_from_truth(&cfg.sim.beta0(), cfg.sim.k1, &cfg.sim)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let gamma = match (cfg.gamma, cfg.k2) {
            (Some(g), _) => g,
            (None, Some(k2)) => gamma_schedule(n, cfg.sim.p, k2, cfg.alpha)?,
            (None, None) => return Err(CliError::Usage("tail needs --gamma or --k2".into())),
        };
        let norms = score_sup_norms(&cfg.sim.with_n(n), cfg.reps, "tail")?;
        rows.push(TailRow {
            n,
            estimate: TailEstimate::from_norms(&norms, gamma),
            bound: tail_bound(gamma, n, cfg.sim.p, constants.k1, constants.k3),
        });
    }
    write_json(out, &TailOutput { constants, rows })?;
    Ok(vec![out.to_path_buf()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BoundsConfig {
    sim: SimConfig,
    gamma: f64,
    re: f64,
    kappa: f64,
    f_q: f64,
    q: f64,
    eps_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BoundsOutput {
    constants: ProofConstants,
    theorem44: BoundValue,
    theorem45: Theorem45Bounds,
}

fn resolve_bounds(a: &BoundsArgs) -> CliResult<BoundsConfig> {
    let sim: SimConfig = read_json(&a.config)?;
    sim.validate()?;
    for (name, v) in [("gamma", a.gamma), ("re", a.re), ("kappa", a.kappa), ("fq", a.fq), ("eps", a.eps)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("--{name} must be finite and >= 0, got {v}")));
        }
    }
    if !(a.q > 1.0) {
        return Err(CliError::Usage(format!("--q must exceed 1, got {}", a.q)));
    }
    Ok(BoundsConfig {
        sim,
        gamma: a.gamma,
        re: a.re,
        kappa: a.kappa,
        f_q: a.fq,
        q: a.q,
        eps_n: a.eps,
    })
}

fn run_bounds(cfg: &BoundsConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let constants = constants_from_truth(&cfg.sim.beta0(), cfg.sim.k1, &cfg.sim)?;
    let output = BoundsOutput {
        constants,
        theorem44: theorem44_bound(constants.k4, cfg.gamma, cfg.re, cfg.eps_n),
        theorem45: theorem45_bounds(constants.k5, cfg.sim.s, cfg.gamma, cfg.kappa, cfg.f_q, cfg.q, cfg.eps_n)?,
    };
    write_json(out, &output)?;
    Ok(vec![out.to_path_buf()])
}

fn resolve_experiment(a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let cfg: ExperimentConfig = read_json(&a.config)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment_cmd(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let report = run_experiment(cfg)?;
    let json_path = out.join("report.json");
    let csv_path = out.join("replications.csv");
    let mut json = report.to_json()?;
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    write_atomic(&csv_path, report.rows_csv()?.as_bytes())?;
    Ok(vec![json_path, csv_path])
}

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrate_k2, constants_from_truth, theorem44_bound, theorem45_bounds, Calibration, ProofConstants};
use crate::dantzig::{gamma_schedule, solve_dsfph, SolverConfig, Status};
use crate::error::{Error, Result};
use crate::factors::{factor_report, population_matrix, sup_norm_diff, FactorOptions, ReportRequest, SupportSet};
use crate::partial_likelihood::PartialLikelihood;
use crate::seed::{replicate_seed, stream_seed};
use crate::survival_sim::{simulate_dataset, Baseline, CovariateLaw, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSettings {
    pub n_big: usize,
    pub mc_reps: usize,
}

impl Default for PopulationSettings {
    fn default() -> Self {
        Self {
            n_big: 20_000,
            mc_reps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    pub reps: usize,
    pub level: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { reps: 200, level: 0.95 }
    }
}

/// Experiment description. `seed` is required; every random draw is a
/// deterministic function of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub p: usize,
    #[serde(alias = "S")]
    pub s: usize,
    pub beta0_values: Vec<f64>,
    pub baseline: Baseline,
    #[serde(default)]
    pub censor_rate: f64,
    pub covariate_law: CovariateLaw,
    #[serde(alias = "K1")]
    pub k1: f64,
    pub tau: f64,
    /// Fixed `K2`; calibrated at the first grid point when absent.
    #[serde(default, alias = "K2")]
    pub k2: Option<f64>,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub population: PopulationSettings,
    /// Exponent of the `l_q` bound.
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub factor_options: FactorOptions,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_q() -> f64 {
    2.0
}

impl ExperimentConfig {
    pub fn sim_config(&self, n: usize, seed: u64) -> SimConfig {
        SimConfig {
            n,
            p: self.p,
            s: self.s,
            beta0_values: self.beta0_values.clone(),
            baseline: self.baseline.clone(),
            censor_rate: self.censor_rate,
            covariate_law: self.covariate_law.clone(),
            k1: self.k1,
            tau: self.tau,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2) {
            return bad("n_grid must list sample sizes >= 2".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.q > 1.0) {
            return bad(format!("q must exceed 1, got {}", self.q));
        }
        if let Some(k2) = self.k2 {
            if !(k2 > 0.0 && k2.is_finite()) {
                return bad(format!("K2 must be positive, got {k2}"));
            }
        }
        gamma_schedule(self.n_grid[0], self.p.max(1), 1.0, self.alpha)?;
        self.sim_config(self.n_grid[0], self.seed).validate()
    }
}

/// One fitted replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub gamma: f64,
    pub status: Status,
    pub outer_iters: usize,
    pub score_sup_beta0: f64,
    pub beta0_feasible: bool,
    pub beta_hat_l1: f64,
    pub beta0_l1: f64,
    pub err_l1: f64,
    pub err_l2: f64,
    pub err_lq: f64,
    pub eps_n: f64,
    pub cone_member: bool,
    /// `h'J_n(beta_0)h <= e^{eta_h} 2 gamma ||h||_1`; checked only when
    /// both `beta_0` and `beta_hat` are feasible.
    pub proof_inequality: Option<bool>,
    pub thm44_bound: Option<f64>,
    pub thm45_l1_bound: Option<f64>,
    pub thm45_lq_bound: Option<f64>,
    pub thm44_satisfied: Option<bool>,
    pub thm45_l1_satisfied: Option<bool>,
    pub thm45_lq_satisfied: Option<bool>,
}

impl ReplicationRow {
    fn eligible(&self) -> bool {
        self.beta0_feasible && self.status != Status::Infeasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionRate {
    pub eligible: usize,
    pub satisfied: usize,
    pub rate: Option<f64>,
}

impl SatisfactionRate {
    fn from_flags(flags: impl Iterator<Item = Option<bool>>) -> Self {
        let (mut eligible, mut satisfied) = (0, 0);
        for f in flags.flatten() {
            eligible += 1;
            satisfied += usize::from(f);
        }
        Self {
            eligible,
            satisfied,
            rate: (eligible > 0).then(|| satisfied as f64 / eligible as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub gamma: f64,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub beta0_feasible_rate: f64,
    pub median_err_l1: f64,
    pub median_err_l2: f64,
    pub median_eps_n: f64,
    pub thm44: SatisfactionRate,
    pub thm45_l1: SatisfactionRate,
    pub thm45_lq: SatisfactionRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedReplication {
    pub n: usize,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFactors {
    pub kappa: f64,
    pub re: f64,
    pub f_q: f64,
    pub q: f64,
    pub stderr_sup: Option<f64>,
    pub n_big: usize,
    pub mc_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub k2: f64,
    pub calibration: Option<Calibration>,
    pub constants: ProofConstants,
    pub factors: SurrogateFactors,
    pub summaries: Vec<NSummary>,
    pub rows: Vec<ReplicationRow>,
    pub failures: Vec<FailedReplication>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per successful replication.
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| crate::error::CsvError::Read(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

struct Shared<'a> {
    config: &'a ExperimentConfig,
    beta0: DVector<f64>,
    support: SupportSet,
    population: nalgebra::DMatrix<f64>,
    constants: ProofConstants,
    factors: &'a SurrogateFactors,
}

fn replicate(shared: &Shared<'_>, n: usize, rep: usize, gamma: f64) -> Result<ReplicationRow> {
    let cfg = shared.config;
    let seed = replicate_seed(stream_seed(cfg.seed, &format!("n={n}")), rep as u64);
    let data = simulate_dataset(&cfg.sim_config(n, seed))?;
    let model = PartialLikelihood::new(&data);
    let at_truth = model.evaluate(&shared.beta0)?;
    let score_sup_beta0 = at_truth.score.amax();
    let eps_n = sup_norm_diff(&at_truth.hessian, &shared.population)?;
    let solver = SolverConfig {
        gamma,
        ..cfg.solver.clone()
    };
    let fit = solve_dsfph(&data, &solver)?;
    let beta_hat = fit.beta();
    let h = &beta_hat - &shared.beta0;
    let err_l1 = h.lp_norm(1);
    let err_l2 = h.norm();
    let err_lq = h.iter().map(|v| v.abs().powf(cfg.q)).sum::<f64>().powf(1.0 / cfg.q);
    let beta0_feasible = score_sup_beta0 <= gamma;

    let f = shared.factors;
    let k = &shared.constants;
    let thm44 = theorem44_bound(k.k4, gamma, f.re, eps_n).value();
    let thm45 = theorem45_bounds(k.k5, cfg.s, gamma, f.kappa, f.f_q, cfg.q, eps_n)?;
    let mut row = ReplicationRow {
        n,
        rep,
        seed,
        gamma,
        status: fit.status,
        outer_iters: fit.outer_iters,
        score_sup_beta0,
        beta0_feasible,
        beta_hat_l1: fit.objective,
        beta0_l1: shared.beta0.lp_norm(1),
        err_l1,
        err_l2,
        err_lq,
        eps_n,
        cone_member: shared.support.in_cone(&h, 1e-6),
        proof_inequality: None,
        thm44_bound: thm44,
        thm45_l1_bound: thm45.l1.value(),
        thm45_lq_bound: thm45.lq.value(),
        thm44_satisfied: None,
        thm45_l1_satisfied: None,
        thm45_lq_satisfied: None,
    };
    if row.eligible() {
        let quad = h.dot(&(&at_truth.hessian * &h));
        let rhs = model.spread(&h).exp() * 2.0 * gamma * err_l1;
        row.proof_inequality = Some(quad <= rhs + 1e-8 * (1.0 + rhs.abs()));
        row.thm44_satisfied = thm44.map(|b| err_l2 * err_l2 <= b);
        row.thm45_l1_satisfied = thm45.l1.value().map(|b| err_l1 <= b);
        row.thm45_lq_satisfied = thm45.lq.value().map(|b| err_lq <= b);
    }
    Ok(row)
}

/// Runs the full simulate / fit / bound pipeline over the `n` grid.
/// Fails when more than 10% of replications error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let first_n = config.n_grid[0];
    let (k2, calibration) = match config.k2 {
        Some(k2) => (k2, None),
        None => {
            let pilot = config.sim_config(first_n, stream_seed(config.seed, "calibration"));
            let cal = calibrate_k2(&pilot, config.alpha, config.calibration.level, config.calibration.reps)?;
            (cal.k2, Some(cal))
        }
    };
    let truth_cfg = config.sim_config(first_n, config.seed);
    let beta0 = truth_cfg.beta0();
    let constants = constants_from_truth(&beta0, config.k1, &truth_cfg)?;
    let pop = population_matrix(
        &config.sim_config(config.population.n_big, stream_seed(config.seed, "population")),
        &beta0,
        config.population.n_big,
        config.population.mc_reps,
    )?;
    let support = SupportSet::leading(config.s, config.p)?;
    let request = ReportRequest {
        qs: vec![config.q],
        phi_2s: false,
        restricted_constants: false,
        ..ReportRequest::default()
    };
    let report = factor_report(&pop.matrix, &support, &config.factor_options, &request)?;
    let factors = SurrogateFactors {
        kappa: report.kappa,
        re: report.re,
        f_q: report.f_q.values().next().copied().unwrap_or(0.0),
        q: config.q,
        stderr_sup: pop.stderr_sup,
        n_big: pop.n_used,
        mc_reps: pop.mc_reps,
    };
    let shared = Shared {
        config,
        beta0,
        support,
        population: pop.matrix,
        constants,
        factors: &factors,
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut summaries = Vec::new();
    for &n in &config.n_grid {
        let gamma = gamma_schedule(n, config.p, k2, config.alpha)?;
        let results: Vec<Result<ReplicationRow>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| replicate(&shared, n, rep, gamma))
            .collect();
        let mut ok = Vec::new();
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(row) => ok.push(row),
                Err(e) => failures.push(FailedReplication {
                    n,
                    rep,
                    message: e.to_string(),
                }),
            }
        }
        let reps_ok = ok.len();
        summaries.push(NSummary {
            n,
            gamma,
            reps_ok,
            reps_failed: config.reps - reps_ok,
            beta0_feasible_rate: ok.iter().filter(|r| r.beta0_feasible).count() as f64 / reps_ok.max(1) as f64,
            median_err_l1: median(ok.iter().map(|r| r.err_l1).collect()),
            median_err_l2: median(ok.iter().map(|r| r.err_l2).collect()),
            median_eps_n: median(ok.iter().map(|r| r.eps_n).collect()),
            thm44: SatisfactionRate::from_flags(ok.iter().map(|r| r.thm44_satisfied)),
            thm45_l1: SatisfactionRate::from_flags(ok.iter().map(|r| r.thm45_l1_satisfied)),
            thm45_lq: SatisfactionRate::from_flags(ok.iter().map(|r| r.thm45_lq_satisfied)),
        });
        rows.extend(ok);
    }
    let total = config.reps * config.n_grid.len();
    if failures.len() * 10 > total {
        return Err(Error::ExperimentFailed {
            failed: failures.len(),
            total,
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        k2,
        calibration,
        constants,
        factors,
        summaries,
        rows,
        failures,
    })
}

//! Dantzig selector for the proportional hazards model:
//! `min ||b||_1  s.t.  ||U_n(b)||_inf <= gamma`.
//!
//! The constraint set is handled by sequential linearization. At iterate
//! `b_k` the score is replaced by `r - G b` with `G = J_n(b_k)` and
//! `r = U_n(b_k) + J_n(b_k) b_k`, and the resulting linear Dantzig program
//! is solved exactly by [`l1_min_under_linf`]. The final iterate is
//! checked against the true nonlinear constraint.

mod lp;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use lp::{solve_lp, LpCertificate, LpFailure, LpSolution};

use crate::error::{Error, Result};
use crate::partial_likelihood::PartialLikelihood;
use crate::survival_sim::SurvivalDataset;

/// `K2 log(1 + p) / n^alpha`.
pub fn gamma_schedule(n: usize, p: usize, k2: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1/2] for the score to concentrate at rate gamma, got {alpha}"
        )));
    }
    if n == 0 || p == 0 {
        return Err(Error::InvalidConfig("gamma schedule needs n >= 1 and p >= 1".into()));
    }
    if !(k2 > 0.0 && k2.is_finite()) {
        return Err(Error::InvalidConfig(format!("K2 must be positive, got {k2}")));
    }
    Ok(k2 * (1.0 + p as f64).ln() / (n as f64).powf(alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta", rename_all = "snake_case")]
pub enum Init {
    Zero,
    Warm(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma: f64,
    pub max_outer: usize,
    /// Stop when `||b_{k+1} - b_k||_inf` falls below this.
    pub outer_tol: f64,
    /// Required duality gap of every inner solve.
    pub lp_tol: f64,
    pub feasibility_slack: f64,
    pub init: Init,
    pub max_pivots: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            max_outer: 50,
            outer_tol: 1e-6,
            lp_tol: 1e-8,
            feasibility_slack: 1e-6,
            init: Init::Zero,
            max_pivots: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        for (name, v) in [
            ("outer_tol", self.outer_tol),
            ("lp_tol", self.lp_tol),
            ("feasibility_slack", self.feasibility_slack),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub objective: f64,
    pub constraint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub beta_hat: Vec<f64>,
    pub gamma: f64,
    pub outer_iters: usize,
    /// `||beta_hat||_1`.
    pub objective: f64,
    /// `||U_n(beta_hat)||_inf`.
    pub constraint_value: f64,
    pub trace: Vec<TracePoint>,
    pub status: Status,
    /// Largest duality gap over the inner solves.
    pub max_duality_gap: f64,
    pub restarted_from_zero: bool,
}

impl EstimateResult {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_hat)
    }
}

/// Solution of the inner linear Dantzig program.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub beta: DVector<f64>,
    pub certificate: LpCertificate,
}

/// `min ||b||_1  s.t.  ||r - G b||_inf <= gamma`, written as an LP in
/// `(b+, b-) >= 0`. Ties among optimal vertices are broken by Bland's rule.
pub fn l1_min_under_linf(g: &DMatrix<f64>, r: &DVector<f64>, gamma: f64) -> Result<InnerSolution> {
    l1_min_with_limit(g, r, gamma, SolverConfig::default().max_pivots)
}

fn l1_min_with_limit(g: &DMatrix<f64>, r: &DVector<f64>, gamma: f64, max_pivots: usize) -> Result<InnerSolution> {
    let p = r.len();
    if g.shape() != (p, p) {
        return Err(Error::Dimension(format!("G is {:?}, r has length {p}", g.shape())));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InfeasibleAtGamma(gamma));
    }
    if r.amax() <= gamma {
        return Ok(InnerSolution {
            beta: DVector::zeros(p),
            certificate: LpCertificate {
                duality_gap: 0.0,
                primal_infeasibility: 0.0,
                dual_infeasibility: 0.0,
                pivots: 0,
            },
        });
    }
    let mut a = DMatrix::zeros(2 * p, 2 * p);
    a.view_mut((0, 0), (p, p)).copy_from(g);
    a.view_mut((0, p), (p, p)).copy_from(&(-g));
    a.view_mut((p, 0), (p, p)).copy_from(&(-g));
    a.view_mut((p, p), (p, p)).copy_from(g);
    let mut b = DVector::zeros(2 * p);
    for j in 0..p {
        b[j] = r[j] + gamma;
        b[p + j] = gamma - r[j];
    }
    let c = DVector::from_element(2 * p, 1.0);
    match solve_lp(&a, &b, &c, max_pivots) {
        Ok(sol) => Ok(InnerSolution {
            beta: DVector::from_fn(p, |j, _| sol.x[j] - sol.x[p + j]),
            certificate: sol.certificate,
        }),
        Err(LpFailure::Infeasible) => Err(Error::InfeasibleAtGamma(gamma)),
        Err(LpFailure::PivotLimit(k)) => Err(Error::PivotLimit(k)),
    }
}

struct OuterRun {
    beta: DVector<f64>,
    iters: usize,
    converged: bool,
    /// The inner LP was infeasible at the last linearization.
    lp_infeasible: bool,
    max_gap: f64,
}

fn outer_loop(
    model: &PartialLikelihood,
    config: &SolverConfig,
    start: DVector<f64>,
    trace: &mut Vec<TracePoint>,
) -> Result<OuterRun> {
    let mut run = OuterRun {
        beta: start,
        iters: 0,
        converged: false,
        lp_infeasible: false,
        max_gap: 0.0,
    };
    while run.iters < config.max_outer {
        run.iters += 1;
        let eval = model.evaluate(&run.beta)?;
        let r = &eval.score + &eval.hessian * &run.beta;
        let inner = match l1_min_with_limit(&eval.hessian, &r, config.gamma, config.max_pivots) {
            Ok(inner) => inner,
            Err(Error::InfeasibleAtGamma(_)) => {
                run.lp_infeasible = true;
                return Ok(run);
            }
            Err(e) => return Err(e),
        };
        run.max_gap = run.max_gap.max(inner.certificate.duality_gap);
        let step = (&inner.beta - &run.beta).amax();
        run.beta = inner.beta;
        trace.push(TracePoint {
            objective: run.beta.lp_norm(1),
            constraint: model.evaluate(&run.beta)?.score.amax(),
        });
        if step <= config.outer_tol {
            run.converged = true;
            break;
        }
    }
    Ok(run)
}

/// Fits the estimator on `dataset`. LP infeasibility during the outer
/// loop triggers one restart from zero; a second failure, or a final
/// iterate outside the true constraint set, yields [`Status::Infeasible`].
pub fn solve_dsfph(dataset: &SurvivalDataset, config: &SolverConfig) -> Result<EstimateResult> {
    config.validate()?;
    let model = PartialLikelihood::new(dataset);
    solve_with_model(&model, config)
}

fn solve_with_model(model: &PartialLikelihood, config: &SolverConfig) -> Result<EstimateResult> {
    let p = model.p();
    let start = match &config.init {
        Init::Zero => DVector::zeros(p),
        Init::Warm(b) => {
            if b.len() != p {
                return Err(Error::Dimension(format!("warm start has length {}, data has p = {p}", b.len())));
            }
            DVector::from_column_slice(b)
        }
    };
    let mut trace = Vec::new();
    let from_zero = start.amax() == 0.0;
    let mut run = outer_loop(model, config, start, &mut trace)?;
    let mut restarted = false;
    // A failure at the very first linearization from zero would repeat.
    if run.lp_infeasible && !(from_zero && run.iters == 1) {
        restarted = true;
        let iters = run.iters;
        run = outer_loop(model, config, DVector::zeros(p), &mut trace)?;
        run.iters += iters;
    }
    let constraint_value = model.evaluate(&run.beta)?.score.amax();
    let feasible = constraint_value <= config.gamma + config.feasibility_slack;
    let status = match (feasible && !run.lp_infeasible, run.converged) {
        (false, _) => Status::Infeasible,
        (true, true) => Status::Converged,
        (true, false) => Status::MaxIters,
    };
    Ok(EstimateResult {
        beta_hat: run.beta.iter().copied().collect(),
        gamma: config.gamma,
        outer_iters: run.iters,
        objective: run.beta.lp_norm(1),
        constraint_value,
        trace,
        status,
        max_duality_gap: run.max_gap,
        restarted_from_zero: restarted,
    })
}

/// Warm-started sweep over a descending grid of `gamma` values. Each point
/// starts from the previous estimate; failures are reported per point.
pub fn gamma_grid_fit(
    dataset: &SurvivalDataset,
    gammas: &[f64],
    config: &SolverConfig,
) -> Result<Vec<Result<EstimateResult>>> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig("gamma grid is empty".into()));
    }
    if gammas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidConfig("gamma grid must be sorted in descending order".into()));
    }
    let model = PartialLikelihood::new(dataset);
    let mut init = config.init.clone();
    let mut out = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let cfg = SolverConfig {
            gamma,
            init: init.clone(),
            ..config.clone()
        };
        let res = cfg.validate().and_then(|_| solve_with_model(&model, &cfg));
        if let Ok(r) = &res {
            init = Init::Warm(r.beta_hat.clone());
        }
        out.push(res);
    }
    Ok(out)
}

/// Whether the `||beta_hat||_1` path is non-increasing in `gamma` over a
/// descending grid, within `tol`.
pub fn path_is_monotone(results: &[Result<EstimateResult>], tol: f64) -> bool {
    let objs: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.objective).collect();
    objs.windows(2).all(|w| w[1] + tol >= w[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalityProbe {
    pub attempts: usize,
    pub feasible_points: usize,
    /// `min ||b'||_1 - ||beta_hat||_1` over feasible probes.
    pub min_l1_gap: f64,
    pub violations: usize,
}

/// Random local search for a feasible point with smaller `l1` norm than
/// `estimate`. Each probe perturbs `beta_hat` by up to `radius` per
/// coordinate and, when infeasible, is pulled back toward `beta_hat` by
/// bisection until the true constraint holds.
pub fn probe_local_minimality(
    dataset: &SurvivalDataset,
    estimate: &EstimateResult,
    slack: f64,
    attempts: usize,
    radius: f64,
    seed: u64,
) -> Result<MinimalityProbe> {
    let model = PartialLikelihood::new(dataset);
    let beta_hat = estimate.beta();
    let limit = estimate.gamma + slack;
    let feasible = |b: &DVector<f64>| -> Result<bool> { Ok(model.evaluate(b)?.score.amax() <= limit) };
    let base = beta_hat.lp_norm(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = MinimalityProbe {
        attempts,
        feasible_points: 0,
        min_l1_gap: f64::INFINITY,
        violations: 0,
    };
    for _ in 0..attempts {
        let dir = DVector::from_fn(beta_hat.len(), |_, _| rng.random_range(-radius..radius));
        let mut candidate = &beta_hat + &dir;
        if !feasible(&candidate)? {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                if feasible(&(&beta_hat + &dir * mid))? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                continue;
            }
            candidate = &beta_hat + &dir * lo;
        }
        probe.feasible_points += 1;
        let gap = candidate.lp_norm(1) - base;
        probe.min_l1_gap = probe.min_l1_gap.min(gap);
        if gap < -1e-4 {
            probe.violations += 1;
        }
    }
    Ok(probe)
}

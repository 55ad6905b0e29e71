//! Finite-sample versions of the tail and error bounds.
//!
//! The tail bound for one score coordinate is
//! `2 exp(-gamma^2 / (2 (2 K1 gamma / n + K3 / n)))`, and a union over the
//! `p` coordinates bounds `P(||U_n(beta_0)||_inf >= gamma)`. The error bounds
//! hold on the event `||U_n(beta_0)||_inf <= gamma`, so the experiment
//! checks them replication by replication on that event.

mod experiment;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentReport, NSummary, PopulationSettings, ReplicationRow,
};

use crate::error::{Error, Result};
use crate::partial_likelihood::PartialLikelihood;
use crate::seed::{replicate_seed, stream_seed};
use crate::survival_sim::{simulate_dataset, SimConfig};

/// A bound that is either a finite number or vacuous because its
/// denominator is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundValue {
    Finite(f64),
    Vacuous,
}

impl BoundValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Vacuous => None,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        matches!(self, Self::Vacuous)
    }

    fn ratio(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Self::Finite(num / den)
        } else {
            Self::Vacuous
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    pub k1: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    /// `int_0^tau alpha_0(u) du`.
    pub baseline_integral: f64,
    pub beta0_l1: f64,
}

/// `K3 = 4 K1^2 exp(K1 ||b0||_1) Lambda_0(tau)`,
/// `K4 = 4 ||b0||_1 exp(4 K1 ||b0||_1)`, `K5 = 2 exp(4 K1 ||b0||_1)`.
pub fn constants_from_truth(beta0: &DVector<f64>, k1: f64, sim_config: &SimConfig) -> Result<ProofConstants> {
    if !(k1 > 0.0) {
        return Err(Error::InvalidConfig(format!("K1 must be positive, got {k1}")));
    }
    sim_config.baseline.validate()?;
    let l1 = beta0.lp_norm(1);
    let baseline_integral = sim_config.baseline.build().cumulative(sim_config.tau);
    let growth = (4.0 * k1 * l1).exp();
    Ok(ProofConstants {
        k1,
        k3: 4.0 * k1 * k1 * (k1 * l1).exp() * baseline_integral,
        k4: 4.0 * l1 * growth,
        k5: 2.0 * growth,
        baseline_integral,
        beta0_l1: l1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// Bound for one coordinate, in `[0, 2]`.
    pub single: f64,
    /// `min(p * single, 1)`.
    pub union: f64,
}

pub fn tail_bound(gamma: f64, n: usize, p: usize, k1: f64, k3: f64) -> TailBound {
    let n = n as f64;
    let denom = 2.0 * (2.0 * k1 * gamma / n + k3 / n);
    let single = 2.0 * (-(gamma * gamma) / denom).exp();
    TailBound {
        single,
        union: (p as f64 * single).min(1.0),
    }
}

/// Exact (Clopper-Pearson) two-sided binomial interval.
pub fn binomial_interval(successes: usize, trials: usize, level: f64) -> (f64, f64) {
    let a = 1.0 - level;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map_or(0.0, |b| b.inverse_cdf(a / 2.0))
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map_or(1.0, |b| b.inverse_cdf(1.0 - a / 2.0))
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub gamma: f64,
    pub exceedances: usize,
    pub reps: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TailEstimate {
    pub fn from_norms(norms: &[f64], gamma: f64) -> Self {
        let exceedances = norms.iter().filter(|&&v| v >= gamma).count();
        let reps = norms.len();
        let (ci_low, ci_high) = binomial_interval(exceedances, reps, 0.95);
        Self {
            gamma,
            exceedances,
            reps,
            probability: exceedances as f64 / reps as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// `||U_n(beta_0)||_inf` on `reps` datasets simulated from `sim_config` with
/// seeds `replicate_seed(stream_seed(sim_config.seed, stream), r)`.
pub fn score_sup_norms(sim_config: &SimConfig, reps: usize, stream: &str) -> Result<Vec<f64>> {
    sim_config.validate()?;
    let beta0 = sim_config.beta0();
    let base = stream_seed(sim_config.seed, stream);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate_dataset(&sim_config.with_seed(replicate_seed(base, r as u64)))?;
            Ok(PartialLikelihood::new(&data).evaluate(&beta0)?.score.amax())
        })
        .collect()
}

/// Monte Carlo estimate of `P(||U_n(beta_0)||_inf >= gamma)`.
pub fn mc_score_tail(sim_config: &SimConfig, gamma: f64, reps: usize) -> Result<TailEstimate> {
    if reps < 100 {
        return Err(Error::InvalidConfig(format!("tail estimation needs at least 100 replications, got {reps}")));
    }
    let norms = score_sup_norms(sim_config, reps, "tail")?;
    Ok(TailEstimate::from_norms(&norms, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub k2: f64,
    pub level: f64,
    pub reps: usize,
    pub n: usize,
    pub alpha: f64,
}

/// Smallest `K2` for which `||U_n(beta_0)||_inf <= K2 log(1+p) / n^alpha` on a
/// fraction `level` of pilot replications at sample size `sim_config.n`.
pub fn calibrate_k2(sim_config: &SimConfig, alpha: f64, level: f64, reps: usize) -> Result<Calibration> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1/2], got {alpha}")));
    }
    if !(level > 0.0 && level < 1.0) || reps == 0 {
        return Err(Error::InvalidConfig("calibration needs 0 < level < 1 and reps >= 1".into()));
    }
    let scale = (sim_config.n as f64).powf(alpha) / (1.0 + sim_config.p as f64).ln();
    let mut k: Vec<f64> = score_sup_norms(sim_config, reps, "calibration")?
        .into_iter()
        .map(|v| v * scale)
        .collect();
    k.sort_by(f64::total_cmp);
    let idx = ((level * reps as f64).ceil() as usize).clamp(1, reps) - 1;
    Ok(Calibration {
        k2: k[idx].max(f64::MIN_POSITIVE),
        level,
        reps,
        n: sim_config.n,
        alpha,
    })
}

/// `K4 gamma / (RE^2 - eps_n)`, a bound on `||beta_hat - beta_0||_2^2`.
pub fn theorem44_bound(k4: f64, gamma: f64, re: f64, eps_n: f64) -> BoundValue {
    BoundValue::ratio(k4 * gamma, re * re - eps_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem45Bounds {
    /// Bound on `||beta_hat - beta_0||_1`.
    pub l1: BoundValue,
    /// Bound on `||beta_hat - beta_0||_q`.
    pub lq: BoundValue,
    pub q: f64,
}

/// `l1 = 4 K5 S gamma / (kappa^2 - 4 S eps_n)` and
/// `lq = (2 S^{1/q} eps_n / F_q) (2 K5 S gamma / (kappa^2 - 2 S eps_n)) + 2 K5 S^{1/q} gamma / F_q`.
pub fn theorem45_bounds(
    k5: f64,
    s: usize,
    gamma: f64,
    kappa: f64,
    f_q: f64,
    q: f64,
    eps_n: f64,
) -> Result<Theorem45Bounds> {
    if !(q > 1.0) {
        return Err(Error::InvalidConfig(format!("the l_q bound needs q > 1, got {q}")));
    }
    let s_f = s as f64;
    let k2 = kappa * kappa;
    let l1 = BoundValue::ratio(4.0 * k5 * s_f * gamma, k2 - 4.0 * s_f * eps_n);
    let sq = s_f.powf(1.0 / q);
    let lq = if k2 > 2.0 * s_f * eps_n && f_q > 0.0 {
        BoundValue::Finite(
            (2.0 * sq * eps_n / f_q) * (2.0 * k5 * s_f * gamma / (k2 - 2.0 * s_f * eps_n))
                + 2.0 * k5 * sq * gamma / f_q,
        )
    } else {
        BoundValue::Vacuous
    };
    Ok(Theorem45Bounds { l1, lq, q })
}

#[cfg(test)]
mod tests;

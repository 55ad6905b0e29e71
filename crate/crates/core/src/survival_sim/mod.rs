//! Cox-model survival data: simulation with a known sparse truth, event
//! ordering and CSV input/output.
//!
//! Subject `i` has event intensity `Y_i(t) alpha_0(t) exp(Z_i' beta_0)`.
//! Event times are drawn exactly by inverting the cumulative hazard,
//! censoring is an independent exponential clock plus administrative
//! censoring at `tau`.

mod covariates;
mod csv_io;
mod hazard;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

pub use covariates::{CovariateLaw, CovariateSampler};
pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use hazard::{Baseline, BaselineHazard, ConstantHazard, WeibullHazard};

use crate::error::{Error, Result};
use crate::seed::stream_seed;

/// Pilot sample size used to calibrate the censoring rate.
const CENSOR_PILOT: usize = 5_000;

/// One subject: follow-up time `X = min(T, C, tau)`, event indicator
/// `D = 1{T <= min(C, tau)}` and covariates `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub observations: Vec<Observation>,
    pub p: usize,
    /// Study horizon; every follow-up time is at most `tau`.
    pub tau: f64,
}

impl SurvivalDataset {
    /// Builds a dataset after checking every invariant.
    pub fn new(observations: Vec<Observation>, p: usize, tau: f64) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidConfig("dataset has no observations".into()));
        }
        for (i, o) in observations.iter().enumerate() {
            if o.covariates.len() != p {
                return Err(Error::Dimension(format!(
                    "observation {i} has {} covariates, expected {p}",
                    o.covariates.len()
                )));
            }
            if !(o.time > 0.0 && o.time.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "observation {i} has non-positive time {}",
                    o.time
                )));
            }
            if o.time > tau {
                return Err(Error::InvalidConfig(format!(
                    "observation {i} has time {} beyond tau = {tau}",
                    o.time
                )));
            }
        }
        Ok(Self {
            observations,
            p,
            tau,
        })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn n_events(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    pub fn event_fraction(&self) -> f64 {
        self.n_events() as f64 / self.n() as f64
    }

    /// `n x p` design matrix.
    pub fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.p, |i, j| self.observations[i].covariates[j])
    }

    /// `sup_{i,j} |Z_ij|`.
    pub fn max_abs_covariate(&self) -> f64 {
        self.observations
            .iter()
            .flat_map(|o| o.covariates.iter())
            .fold(0.0_f64, |m, z| m.max(z.abs()))
    }

    /// At-risk process `Y_i(t) = 1{X_i >= t}`.
    pub fn at_risk(&self, i: usize, t: f64) -> bool {
        self.observations[i].time >= t
    }

    /// Counting process `N_i(t) = 1{X_i <= t, D_i = 1}`.
    pub fn counting(&self, i: usize, t: f64) -> u32 {
        let o = &self.observations[i];
        u32::from(o.event && o.time <= t)
    }
}

/// Simulation settings. JSON field names follow this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    /// Sparsity: `beta_0` is nonzero on the first `s` coordinates.
    #[serde(alias = "S")]
    pub s: usize,
    pub beta0_values: Vec<f64>,
    pub baseline: Baseline,
    /// Target expected censored fraction, in `[0, 1)`.
    pub censor_rate: f64,
    pub covariate_law: CovariateLaw,
    #[serde(alias = "K1")]
    pub k1: f64,
    /// Administrative censoring horizon; use a very large value for none.
    pub tau: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 || self.p == 0 {
            return bad(format!("n and p must be positive (n = {}, p = {})", self.n, self.p));
        }
        if self.s == 0 || self.s > self.p {
            return bad(format!("sparsity S = {} must satisfy 1 <= S <= p = {}", self.s, self.p));
        }
        if self.beta0_values.len() != self.s {
            return bad(format!(
                "beta0_values has {} entries but S = {}",
                self.beta0_values.len(),
                self.s
            ));
        }
        if self.beta0_values.iter().any(|b| !b.is_finite()) {
            return bad("beta0_values must be finite".into());
        }
        if !(0.0..1.0).contains(&self.censor_rate) {
            return bad(format!("censor_rate {} must lie in [0, 1)", self.censor_rate));
        }
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return bad(format!("K1 = {} must be positive and finite", self.k1));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau = {} must be positive and finite", self.tau));
        }
        self.baseline.validate()?;
        self.covariate_law.validate(self.k1)
    }

    /// Full-length truth: `beta0_values` on the first `s` coordinates.
    pub fn beta0(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.p);
        for (j, v) in self.beta0_values.iter().enumerate() {
            b[j] = *v;
        }
        b
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

fn draw_covariates(
    sampler: &dyn CovariateSampler,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    (0..p).map(|_| sampler.sample(rng)).collect()
}

fn draw_event_time(
    hazard: &dyn BaselineHazard,
    z: &[f64],
    beta0: &[f64],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let eta: f64 = beta0.iter().zip(z).map(|(b, x)| b * x).sum();
    let e: f64 = rng.sample(Exp1);
    hazard.inverse_cumulative(e / eta.exp())
}

/// Expected censored fraction given event times, for exponential
/// censoring at `rate` plus administrative censoring at `tau`.
fn censored_fraction(times: &[f64], tau: f64, rate: f64) -> f64 {
    let total: f64 = times
        .iter()
        .map(|&t| {
            if t > tau {
                1.0
            } else {
                1.0 - (-rate * t).exp()
            }
        })
        .sum();
    total / times.len() as f64
}

/// Exponential censoring rate hitting `target` in expectation, by bisection
/// on an independent pilot sample. Zero when administrative censoring alone
/// already reaches the target.
fn calibrate_censoring(config: &SimConfig, hazard: &dyn BaselineHazard) -> f64 {
    if config.censor_rate == 0.0 {
        return 0.0;
    }
    let sampler = config.covariate_law.build(config.k1);
    let beta0: Vec<f64> = config.beta0().iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, "censoring-pilot"));
    let times: Vec<f64> = (0..CENSOR_PILOT)
        .map(|_| {
            let z = draw_covariates(sampler.as_ref(), config.p, &mut rng);
            draw_event_time(hazard, &z, &beta0, &mut rng)
        })
        .collect();
    let target = config.censor_rate;
    if censored_fraction(&times, config.tau, 0.0) >= target {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while censored_fraction(&times, config.tau, hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if censored_fraction(&times, config.tau, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Simulates one dataset. Pure function of the config (including its seed).
pub fn simulate_dataset(config: &SimConfig) -> Result<SurvivalDataset> {
    config.validate()?;
    let hazard = config.baseline.build();
    let sampler = config.covariate_law.build(config.k1);
    let beta0: Vec<f64> = config.beta0().iter().copied().collect();
    let censor_rate = calibrate_censoring(config, hazard.as_ref());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut censor_rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, "censoring"));
    let mut observations = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let z = draw_covariates(sampler.as_ref(), config.p, &mut rng);
        let t = draw_event_time(hazard.as_ref(), &z, &beta0, &mut rng);
        let c = if censor_rate > 0.0 {
            let e: f64 = censor_rng.sample(Exp1);
            e / censor_rate
        } else {
            f64::INFINITY
        };
        let c = c.min(config.tau);
        let (time, event) = if t <= c { (t, true) } else { (c, false) };
        observations.push(Observation {
            time: time.max(f64::MIN_POSITIVE),
            event,
            covariates: z,
        });
    }
    if !observations.iter().any(|o| o.event) {
        return Err(Error::DegenerateDataset);
    }
    SurvivalDataset::new(observations, config.p, config.tau)
}

/// Event times in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct EventOrder {
    /// `(event time, subject index)`, sorted by time then index.
    pub events: Vec<(f64, usize)>,
    /// Set when two events share a time; ties are broken by subject index.
    pub has_ties: bool,
}

pub fn event_order(dataset: &SurvivalDataset) -> EventOrder {
    let mut events: Vec<(f64, usize)> = dataset
        .observations
        .iter()
        .enumerate()
        .filter(|(_, o)| o.event)
        .map(|(i, o)| (o.time, i))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let has_ties = events.windows(2).any(|w| w[0].0 == w[1].0);
    EventOrder { events, has_ties }
}

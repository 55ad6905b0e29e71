use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cone::{descend, sample_oracle, signed_cone_qp, structured_starts, ConeProgram, Denominator};
use super::{check_symmetric, FactorOptions, SupportSet};
use crate::error::{Error, Result};
use crate::seed::stream_seed;

/// Result of one cone-restricted infimum.
///
/// `value` is an upper bound on the true infimum: the smaller of the
/// descent result and the sampling oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEstimate {
    pub name: String,
    pub value: f64,
    pub descent_value: f64,
    pub oracle_value: f64,
    /// `oracle_value - descent_value`; positive when descent beat sampling.
    pub oracle_gap: f64,
    pub restarts: usize,
    pub minimizer: Vec<f64>,
}

impl FactorEstimate {
    fn zero(name: String, p: usize, support: &SupportSet) -> Self {
        let mut h = vec![0.0; p];
        h[support.indices()[0]] = 1.0;
        Self {
            name,
            value: 0.0,
            descent_value: 0.0,
            oracle_value: 0.0,
            oracle_gap: 0.0,
            restarts: 0,
            minimizer: h,
        }
    }
}

/// A matrix functional defined as an infimum over the cone
/// `C_T0 = {h : ||h_T0^c||_1 <= ||h_T0||_1}`.
pub trait MatrixFactor: Send + Sync {
    fn name(&self) -> String;

    fn compute(&self, m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<FactorEstimate>;

    /// Factor ratio at a single cone point, if `h` is admissible.
    fn objective_at(&self, m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64>;
}

fn minimise(
    name: String,
    program: &ConeProgram<'_>,
    opts: &FactorOptions,
    extra_starts: Vec<DVector<f64>>,
    rng: &mut ChaCha8Rng,
    oracle_samples: usize,
) -> Option<FactorEstimate> {
    let mut starts = structured_starts(program);
    starts.extend(extra_starts);
    while starts.len() < opts.restarts.max(1) + 8 {
        match program.sample(rng) {
            Some(h) => starts.push(h),
            None => break,
        }
    }
    let restarts = starts.len();
    let descent = starts
        .into_iter()
        .filter_map(|h| descend(program, h, opts.max_iter, opts.tol))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let oracle = sample_oracle(program, oracle_samples, rng);
    let descent_value = descent.as_ref().map_or(f64::INFINITY, |d| d.0);
    let oracle_value = oracle.as_ref().map_or(f64::INFINITY, |o| o.0);
    let (best, h) = match (descent, oracle) {
        (Some(d), Some(o)) => {
            if o.0 < d.0 {
                o
            } else {
                d
            }
        }
        (Some(d), None) => d,
        (None, Some(o)) => o,
        (None, None) => return None,
    };
    Some(FactorEstimate {
        name,
        value: best.sqrt(),
        descent_value: descent_value.sqrt(),
        oracle_value: oracle_value.sqrt(),
        oracle_gap: oracle_value.sqrt() - descent_value.sqrt(),
        restarts,
        minimizer: h.iter().copied().collect(),
    })
}

fn prepare(m: &DMatrix<f64>, support: &SupportSet) -> Result<()> {
    if m.nrows() != support.p() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, support set lives in p = {}",
            m.nrows(),
            m.ncols(),
            support.p()
        )));
    }
    check_symmetric(m)
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&x| x == 0.0)
}

/// Compatibility factor `kappa(T0; M) = inf sqrt(S h'Mh) / ||h_T0||_1`.
///
/// For each sign pattern on `T0` the problem is a convex quadratic
/// programme over a simplex times an l1 ball; all patterns are enumerated
/// up to `|T0| = 16`, beyond that `restarts` random patterns are used.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompatibilityFactor;

impl MatrixFactor for CompatibilityFactor {
    fn name(&self) -> String {
        "kappa".into()
    }

    fn compute(&self, m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<FactorEstimate> {
        prepare(m, support)?;
        if is_zero(m) {
            return Ok(FactorEstimate::zero(self.name(), m.nrows(), support));
        }
        let s = support.len();
        let program = ConeProgram::new(m, support, Denominator::SupportL1, None);
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(opts.seed, "kappa"));
        let lipschitz = 2.0 * m.symmetric_eigenvalues().max().max(0.0);
        let patterns: Vec<Vec<f64>> = if s <= 16 {
            (0..1usize << (s - 1))
                .map(|mask| {
                    (0..s)
                        .map(|k| if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 })
                        .collect()
                })
                .collect()
        } else {
            (0..opts.restarts.max(1))
                .map(|_| {
                    (0..s)
                        .map(|_| if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect()
        };
        let qp_iter = opts.max_iter.max(20_000);
        let (qp_value, qp_h) = patterns
            .iter()
            .map(|signs| signed_cone_qp(m, support, signs, lipschitz, qp_iter))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one sign pattern");
        let descent_value = (s as f64 * qp_value).sqrt();
        let oracle = sample_oracle(&program, opts.oracle_samples, &mut rng);
        let oracle_value = oracle.as_ref().map_or(f64::INFINITY, |o| o.0.sqrt());
        let (value, h) = match oracle {
            Some((v, h)) if v.sqrt() < descent_value => (v.sqrt(), h),
            _ => (descent_value, qp_h),
        };
        Ok(FactorEstimate {
            name: self.name(),
            value,
            descent_value,
            oracle_value,
            oracle_gap: oracle_value - descent_value,
            restarts: patterns.len(),
            minimizer: h.iter().copied().collect(),
        })
    }

    fn objective_at(&self, m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64> {
        ConeProgram::new(m, support, Denominator::SupportL1, None)
            .value(h)
            .map(f64::sqrt)
    }
}

/// Weak cone invertibility factor
/// `F_q(T0; M) = S^{1/q} sqrt(h'Mh) / (||h_T0||_1 ||h||_q)` on the slice
/// `||h_T0||_1 = 1` of the cone.
#[derive(Debug, Clone, Copy)]
pub struct WeakConeInvertibility {
    q: f64,
}

impl WeakConeInvertibility {
    /// Order used as the stand-in for `q = infinity`.
    pub const INFINITY_SURROGATE: f64 = 64.0;

    pub fn new(q: f64) -> Result<Self> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidConfig(format!("F_q requires finite q >= 1, got {q}")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

impl MatrixFactor for WeakConeInvertibility {
    fn name(&self) -> String {
        format!("f{}", self.q)
    }

    fn compute(&self, m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<FactorEstimate> {
        prepare(m, support)?;
        if is_zero(m) {
            return Ok(FactorEstimate::zero(self.name(), m.nrows(), support));
        }
        let program = ConeProgram::new(m, support, Denominator::Lq(self.q), None);
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(opts.seed, &self.name()));
        minimise(self.name(), &program, opts, Vec::new(), &mut rng, opts.oracle_samples)
            .ok_or_else(|| Error::InvalidConfig("no admissible cone direction".into()))
    }

    fn objective_at(&self, m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64> {
        ConeProgram::new(m, support, Denominator::Lq(self.q), None)
            .value(h)
            .map(f64::sqrt)
    }
}

/// Restricted eigenvalue `RE(T0; M) = inf sqrt(h'Mh) / ||h||_2` over the cone.
#[derive(Debug, Clone, Copy, Default)]
pub struct RestrictedEigenvalue;

impl MatrixFactor for RestrictedEigenvalue {
    fn name(&self) -> String {
        "re".into()
    }

    fn compute(&self, m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<FactorEstimate> {
        prepare(m, support)?;
        if is_zero(m) {
            return Ok(FactorEstimate::zero(self.name(), m.nrows(), support));
        }
        let program = ConeProgram::new(m, support, Denominator::L2, None);
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(opts.seed, "re"));
        minimise(self.name(), &program, opts, Vec::new(), &mut rng, opts.oracle_samples)
            .ok_or_else(|| Error::InvalidConfig("no admissible cone direction".into()))
    }

    fn objective_at(&self, m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64> {
        ConeProgram::new(m, support, Denominator::L2, None)
            .value(h)
            .map(f64::sqrt)
    }
}

/// `phi_2S(T0; M) = inf sqrt(h'Mh) / ||h_T||_2` over supersets
/// `T0 ⊆ T`, `|T| <= 2S`, and `h ∈ D_{T0,T}`.
///
/// Supersets are enumerated exhaustively while their number stays within
/// `FactorOptions::superset_budget`, otherwise sampled.
#[derive(Debug, Clone, Copy, Default)]
pub struct Phi2S;

impl Phi2S {
    fn supersets(support: &SupportSet, budget: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, bool) {
        let p = support.p();
        let s = support.len();
        let off: Vec<usize> = (0..p).filter(|&j| !support.contains(j)).collect();
        let total: u128 = (0..=s).map(|k| super::binomial(off.len() as u64, k as u64)).sum();
        if total <= budget as u128 {
            let sets = (0..=s)
                .flat_map(|k| off.iter().copied().combinations(k))
                .collect();
            return (sets, true);
        }
        let mut sets = vec![Vec::new()];
        while sets.len() < budget.max(1) {
            let k = rand::Rng::random_range(rng, 1..=s);
            let mut pick: Vec<usize> = rand::seq::IndexedRandom::choose_multiple(off.as_slice(), rng, k)
                .copied()
                .collect();
            pick.sort_unstable();
            sets.push(pick);
        }
        (sets, false)
    }

    /// Best admissible superset value for a given cone point: `T` is `T0`
    /// plus the `k` largest off-support magnitudes, `k = 0..=S`.
    fn value_at(m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64> {
        let mut off: Vec<usize> = (0..support.p()).filter(|&j| !support.contains(j)).collect();
        off.sort_by(|&a, &b| h[b].abs().total_cmp(&h[a].abs()));
        (0..=support.len().min(off.len()))
            .filter_map(|k| {
                let extra = &off[..k];
                ConeProgram::new(m, support, Denominator::SupersetL2, Some(extra)).value(h)
            })
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }
}

impl MatrixFactor for Phi2S {
    fn name(&self) -> String {
        "phi2s".into()
    }

    fn compute(&self, m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<FactorEstimate> {
        prepare(m, support)?;
        if 2 * support.len() > support.p() {
            return Err(Error::InvalidConfig(format!(
                "phi_2S needs 2S <= p (S = {}, p = {})",
                support.len(),
                support.p()
            )));
        }
        if is_zero(m) {
            return Ok(FactorEstimate::zero(self.name(), m.nrows(), support));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(opts.seed, "phi2s"));
        let (sets, _exact) = Self::supersets(support, opts.superset_budget, &mut rng);
        let per_set_samples = (opts.oracle_samples / sets.len()).max(2_000);
        let inner_opts = FactorOptions {
            restarts: (opts.restarts / 4).max(8),
            ..opts.clone()
        };
        let mut best: Option<FactorEstimate> = None;
        let mut restarts = 0;
        let mut best_descent = f64::INFINITY;
        let mut best_oracle = f64::INFINITY;
        for extra in &sets {
            let program = ConeProgram::new(m, support, Denominator::SupersetL2, Some(extra));
            let Some(est) = minimise(self.name(), &program, &inner_opts, Vec::new(), &mut rng, per_set_samples)
            else {
                continue;
            };
            restarts += est.restarts;
            best_descent = best_descent.min(est.descent_value);
            best_oracle = best_oracle.min(est.oracle_value);
            if best.as_ref().is_none_or(|b| est.value < b.value) {
                best = Some(est);
            }
        }
        let mut best = best.ok_or_else(|| Error::InvalidConfig("no admissible cone direction".into()))?;
        best.restarts = restarts;
        best.descent_value = best_descent;
        best.oracle_value = best_oracle;
        best.oracle_gap = best_oracle - best_descent;
        Ok(best)
    }

    fn objective_at(&self, m: &DMatrix<f64>, support: &SupportSet, h: &DVector<f64>) -> Option<f64> {
        Self::value_at(m, support, h)
    }
}

/// Name-indexed collection of factor strategies.
pub struct FactorRegistry {
    factors: BTreeMap<String, Box<dyn MatrixFactor>>,
}

impl Default for FactorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl FactorRegistry {
    pub fn empty() -> Self {
        Self {
            factors: BTreeMap::new(),
        }
    }

    /// `kappa`, `re`, `phi2s` and `f1`, `f2`, `f4`, `f64` (the
    /// `q = infinity` surrogate).
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CompatibilityFactor));
        r.register(Box::new(RestrictedEigenvalue));
        r.register(Box::new(Phi2S));
        for q in [1.0, 2.0, 4.0, WeakConeInvertibility::INFINITY_SURROGATE] {
            r.register(Box::new(WeakConeInvertibility::new(q).expect("valid q")));
        }
        r
    }

    pub fn register(&mut self, factor: Box<dyn MatrixFactor>) {
        self.factors.insert(factor.name(), factor);
    }

    pub fn get(&self, name: &str) -> Option<&dyn MatrixFactor> {
        self.factors.get(name).map(|b| b.as_ref())
    }

    /// Like [`get`](Self::get), but `f<q>` names for unregistered `q >= 1`
    /// are built on demand.
    pub fn resolve(&mut self, name: &str) -> Result<&dyn MatrixFactor> {
        if !self.factors.contains_key(name) {
            let q = name
                .strip_prefix('f')
                .and_then(|q| q.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "unknown factor `{name}`; known: {}",
                        self.names().join(", ")
                    ))
                })?;
            self.register(Box::new(WeakConeInvertibility::new(q)?));
        }
        Ok(self.factors[name].as_ref())
    }

    pub fn names(&self) -> Vec<String> {
        self.factors.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn MatrixFactor> {
        self.factors.values().map(|b| b.as_ref())
    }
}

//! Cone-restricted matrix functionals.
//!
//! The compatibility factor, weak cone invertibility factors, restricted
//! eigenvalue and `phi_2S` are all infima of ratios over the cone
//! `C_T0 = {h : ||h_T0^c||_1 <= ||h_T0||_1}`. Each is a [`MatrixFactor`]
//! strategy registered by name in a [`FactorRegistry`]. Values are upper
//! bounds on the exact infima: the minimum over projected-gradient
//! restarts and an independent dense sampling oracle.

mod cone;
mod matrix_io;
mod population;
mod registry;
mod restricted;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use matrix_io::{load_matrix, matrix_from_rows, matrix_to_rows, read_matrix_csv, write_matrix_csv};
pub use population::{population_matrix, PopulationMatrix};
pub use registry::{
    CompatibilityFactor, FactorEstimate, FactorRegistry, MatrixFactor, Phi2S, RestrictedEigenvalue,
    WeakConeInvertibility,
};
pub use restricted::{
    restricted_isometry, restricted_orthogonality, uup_margin, EnumerationMode, RestrictedConstant,
    ENUMERATION_BUDGET,
};

use crate::error::{Error, Result};

/// Support `T0` of the true coefficient vector, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    p: usize,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidConfig("support set must be nonempty".into()));
        }
        if indices.iter().any(|&j| j >= p) {
            return Err(Error::InvalidConfig(format!("support index out of range for p = {p}")));
        }
        Ok(Self { indices, p })
    }

    /// From 1-based indices as written on the command line.
    pub fn from_one_based(indices: &[usize], p: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidConfig("support indices are 1-based".into()));
        }
        Self::new(indices.iter().map(|j| j - 1).collect(), p)
    }

    /// `{0, ..., s-1}`.
    pub fn leading(s: usize, p: usize) -> Result<Self> {
        Self::new((0..s).collect(), p)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Cone membership `||h_T0^c||_1 <= ||h_T0||_1 + tol`.
    pub fn in_cone(&self, h: &DVector<f64>, tol: f64) -> bool {
        let on: f64 = self.indices.iter().map(|&j| h[j].abs()).sum();
        let off: f64 = h.iter().map(|x| x.abs()).sum::<f64>() - on;
        off <= on + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorOptions {
    pub restarts: usize,
    pub oracle_samples: usize,
    pub max_iter: usize,
    /// Relative-improvement threshold for stopping a descent run.
    pub tol: f64,
    pub seed: u64,
    /// Cap on supersets visited by `phi_2S` before switching to sampling.
    pub superset_budget: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            oracle_samples: 100_000,
            max_iter: 2_000,
            tol: 1e-10,
            seed: 0,
            superset_budget: 100_000,
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * (1.0 + m.amax()) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Entrywise maximum absolute difference `||A - B||_inf`.
pub fn sup_norm_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a - b).amax())
}

pub fn compatibility_factor(m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<f64> {
    Ok(CompatibilityFactor.compute(m, support, opts)?.value)
}

pub fn weak_cone_invertibility_factor(
    m: &DMatrix<f64>,
    support: &SupportSet,
    q: f64,
    opts: &FactorOptions,
) -> Result<f64> {
    Ok(WeakConeInvertibility::new(q)?.compute(m, support, opts)?.value)
}

pub fn restricted_eigenvalue(m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<f64> {
    Ok(RestrictedEigenvalue.compute(m, support, opts)?.value)
}

pub fn phi_2s(m: &DMatrix<f64>, support: &SupportSet, opts: &FactorOptions) -> Result<f64> {
    Ok(Phi2S.compute(m, support, opts)?.value)
}

/// All factors for one matrix and support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub support: Vec<usize>,
    pub kappa: f64,
    /// Keyed by `q` as written (`"64"` is the `q = infinity` surrogate).
    pub f_q: BTreeMap<String, f64>,
    pub re: f64,
    pub phi_2s: Option<f64>,
    /// `delta_N` keyed by `N`.
    pub delta_n: BTreeMap<usize, f64>,
    /// `theta_{S,S'}` keyed by `"S,S'"`.
    pub theta: BTreeMap<String, f64>,
    pub uup_margin: Option<f64>,
    pub diagnostics: Vec<FactorEstimate>,
}

/// Which pieces [`factor_report`] computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportRequest {
    pub qs: Vec<f64>,
    pub phi_2s: bool,
    pub restricted_constants: bool,
    pub enumeration: EnumerationMode,
}

impl Default for ReportRequest {
    fn default() -> Self {
        Self {
            qs: vec![1.0, 2.0, 4.0, WeakConeInvertibility::INFINITY_SURROGATE],
            phi_2s: true,
            restricted_constants: true,
            enumeration: EnumerationMode::default(),
        }
    }
}

fn q_key(q: f64) -> String {
    format!("{q}")
}

/// Computes every factor, then re-evaluates each factor at every other
/// factor's minimiser. All minimisers lie in the cone, so this keeps each
/// value a valid upper bound while sharing the best directions found.
pub fn factor_report(
    m: &DMatrix<f64>,
    support: &SupportSet,
    opts: &FactorOptions,
    request: &ReportRequest,
) -> Result<FactorReport> {
    check_symmetric(m)?;
    let s = support.len();
    let p = m.nrows();
    let mut factors: Vec<Box<dyn MatrixFactor>> =
        vec![Box::new(CompatibilityFactor), Box::new(RestrictedEigenvalue)];
    for &q in &request.qs {
        factors.push(Box::new(WeakConeInvertibility::new(q)?));
    }
    let with_phi = request.phi_2s && 2 * s <= p;
    if with_phi {
        factors.push(Box::new(Phi2S));
    }
    let mut estimates: Vec<FactorEstimate> = factors
        .iter()
        .map(|f| f.compute(m, support, opts))
        .collect::<Result<_>>()?;
    let candidates: Vec<DVector<f64>> = estimates
        .iter()
        .map(|e| DVector::from_column_slice(&e.minimizer))
        .collect();
    for (f, est) in factors.iter().zip(estimates.iter_mut()) {
        for h in &candidates {
            if let Some(v) = f.objective_at(m, support, h) {
                if v < est.value {
                    est.value = v;
                    est.minimizer = h.iter().copied().collect();
                }
            }
        }
    }
    let value = |name: &str| estimates.iter().find(|e| e.name == name).map(|e| e.value);
    let f_q = request
        .qs
        .iter()
        .map(|&q| (q_key(q), value(&format!("f{q}")).expect("computed")))
        .collect();

    let mut delta_n = BTreeMap::new();
    let mut theta = BTreeMap::new();
    let mut margin = None;
    if request.restricted_constants {
        for n in [s, 2 * s].into_iter().filter(|&n| n <= p) {
            delta_n.insert(n, restricted_isometry(m, n, request.enumeration)?.value);
        }
        for (a, b) in [(s, s), (s, 2 * s)].into_iter().filter(|(a, b)| a + b <= p) {
            theta.insert(format!("{a},{b}"), restricted_orthogonality(m, a, b, request.enumeration)?.value);
        }
        if 3 * s <= p {
            margin = Some(1.0 - delta_n[&(2 * s)] - theta[&format!("{s},{}", 2 * s)]);
        }
    }
    Ok(FactorReport {
        support: support.indices().to_vec(),
        kappa: value("kappa").expect("computed"),
        f_q,
        re: value("re").expect("computed"),
        phi_2s: if with_phi { value("phi2s") } else { None },
        delta_n,
        theta,
        uup_margin: margin,
        diagnostics: estimates,
    })
}

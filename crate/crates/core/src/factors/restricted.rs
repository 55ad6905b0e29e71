//! Restricted isometry and restricted orthogonality constants by subset
//! enumeration.
//!
//! For a Gram matrix `M = A'A`, `||A_T h||^2 = h'M_{T,T}h` and
//! `(A_T h)'(A_T' h') = h'M_{T,T'}h'`, so both constants are read off
//! principal and off-diagonal blocks of `M`. By eigenvalue interlacing and
//! monotonicity of singular values under adding rows or columns, only the
//! largest admissible subsets need to be visited.

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{binomial, check_symmetric};
use crate::error::{Error, Result};

/// Default cap on the number of subsets (or subset pairs) enumerated.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnumerationMode {
    /// Visit every subset; fails above `budget`.
    Exact { budget: u64 },
    /// Exact when within `budget`, otherwise `samples` random subsets.
    Sampled { budget: u64, samples: u64, seed: u64 },
}

impl Default for EnumerationMode {
    fn default() -> Self {
        EnumerationMode::Exact {
            budget: ENUMERATION_BUDGET,
        }
    }
}

impl EnumerationMode {
    fn budget(&self) -> u64 {
        match *self {
            EnumerationMode::Exact { budget } | EnumerationMode::Sampled { budget, .. } => budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedConstant {
    pub value: f64,
    pub subsets_examined: u64,
    pub total_subsets: u128,
    /// Fraction of subsets examined; 1 for exact enumeration.
    pub coverage: f64,
    pub exact: bool,
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn isometry_defect(m: &DMatrix<f64>, t: &[usize]) -> f64 {
    let eig = submatrix(m, t, t).symmetric_eigenvalues();
    (eig.max() - 1.0).max(1.0 - eig.min()).max(0.0)
}

fn random_subset(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v = sample(rng, p, k).into_vec();
    v.sort_unstable();
    v
}

/// `delta_N(M)`: the smallest `delta` with
/// `(1 - delta)||h||^2 <= h'M_{T,T}h <= (1 + delta)||h||^2` for all `|T| <= N`.
pub fn restricted_isometry(m: &DMatrix<f64>, n: usize, mode: EnumerationMode) -> Result<RestrictedConstant> {
    check_symmetric(m)?;
    let p = m.nrows();
    if n == 0 || n > p {
        return Err(Error::InvalidConfig(format!("restricted isometry needs 1 <= N <= p (N = {n}, p = {p})")));
    }
    let total = binomial(p as u64, n as u64);
    if total <= mode.budget() as u128 {
        let value = (0..p)
            .combinations(n)
            .map(|t| isometry_defect(m, &t))
            .fold(0.0, f64::max);
        return Ok(RestrictedConstant {
            value,
            subsets_examined: total as u64,
            total_subsets: total,
            coverage: 1.0,
            exact: true,
        });
    }
    match mode {
        EnumerationMode::Exact { budget } => Err(Error::EnumerationBudget { subsets: total, budget }),
        EnumerationMode::Sampled { samples, seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let value = (0..samples)
                .map(|_| isometry_defect(m, &random_subset(p, n, &mut rng)))
                .fold(0.0, f64::max);
            Ok(RestrictedConstant {
                value,
                subsets_examined: samples,
                total_subsets: total,
                coverage: samples as f64 / total as f64,
                exact: false,
            })
        }
    }
}

fn block_norm(m: &DMatrix<f64>, t: &[usize], u: &[usize]) -> f64 {
    submatrix(m, t, u).singular_values().max()
}

/// `theta_{S1,S2}(M)`: the largest spectral norm of an off-diagonal block
/// `M_{T,T'}` over disjoint `|T| <= S1`, `|T'| <= S2`.
pub fn restricted_orthogonality(
    m: &DMatrix<f64>,
    s1: usize,
    s2: usize,
    mode: EnumerationMode,
) -> Result<RestrictedConstant> {
    check_symmetric(m)?;
    let p = m.nrows();
    if s1 == 0 || s2 == 0 || s1 + s2 > p {
        return Err(Error::InvalidConfig(format!(
            "restricted orthogonality needs S, S' >= 1 and S + S' <= p (S = {s1}, S' = {s2}, p = {p})"
        )));
    }
    let total = binomial(p as u64, s1 as u64) * binomial((p - s1) as u64, s2 as u64);
    if total <= mode.budget() as u128 {
        let mut value = 0.0_f64;
        for t in (0..p).combinations(s1) {
            let rest: Vec<usize> = (0..p).filter(|j| !t.contains(j)).collect();
            for u in rest.into_iter().combinations(s2) {
                value = value.max(block_norm(m, &t, &u));
            }
        }
        return Ok(RestrictedConstant {
            value,
            subsets_examined: total as u64,
            total_subsets: total,
            coverage: 1.0,
            exact: true,
        });
    }
    match mode {
        EnumerationMode::Exact { budget } => Err(Error::EnumerationBudget { subsets: total, budget }),
        EnumerationMode::Sampled { samples, seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut value = 0.0_f64;
            for _ in 0..samples {
                let both = sample(&mut rng, p, s1 + s2).into_vec();
                let mut t = both[..s1].to_vec();
                let mut u = both[s1..].to_vec();
                t.sort_unstable();
                u.sort_unstable();
                value = value.max(block_norm(m, &t, &u));
            }
            Ok(RestrictedConstant {
                value,
                subsets_examined: samples,
                total_subsets: total,
                coverage: samples as f64 / total as f64,
                exact: false,
            })
        }
    }
}

/// `1 - delta_2S - theta_{S,2S}`; positive values are the uniform
/// uncertainty principle condition.
pub fn uup_margin(m: &DMatrix<f64>, s: usize, mode: EnumerationMode) -> Result<f64> {
    let p = m.nrows();
    if s == 0 || 3 * s > p {
        return Err(Error::InvalidConfig(format!(
            "UUP margin needs 3S <= p (S = {s}, p = {p})"
        )));
    }
    let delta = restricted_isometry(m, 2 * s, mode)?.value;
    let theta = restricted_orthogonality(m, s, 2 * s, mode)?.value;
    Ok(1.0 - delta - theta)
}

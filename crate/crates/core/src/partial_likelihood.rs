//! Cox log partial likelihood and its first two derivatives.
//!
//! With `S^0 = sum_i Y_i(t) e^{Z_i'b}`, `S^1 = sum_i Y_i(t) e^{Z_i'b} Z_i` and
//! `S^2 = sum_i Y_i(t) e^{Z_i'b} Z_i Z_i'`, all counting-process integrals
//! reduce to sums over observed event times:
//!
//! - `l_n(b) = (1/n) sum_events [Z_i'b - log S^0]`
//! - `U_n(b) = (1/n) sum_events [Z_i - S^1/S^0]`
//! - `J_n(b) = (1/n) sum_events [S^2/S^0 - (S^1/S^0)(S^1/S^0)']`
//!
//! Tied times use the Breslow risk set (every tied subject is at risk).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival_sim::SurvivalDataset;

/// Risk-set moments at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSnapshot {
    pub s0: f64,
    pub s1: DVector<f64>,
    pub s2: DMatrix<f64>,
    pub at_time: f64,
}

/// `l_n`, `U_n` and `J_n` at one coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHessian {
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub loglik: f64,
}

/// Lower, middle and upper terms of the exponential sandwich
/// `e^{-eta} h'J(b)h <= |h'[U(b+h) - U(b)]| <= e^{eta} h'J(b)h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub eta: f64,
}

impl SandwichCheck {
    pub fn holds(&self, rel_slack: f64) -> bool {
        let slack = rel_slack * (1.0 + self.upper);
        self.lower <= self.middle + slack && self.middle <= self.upper + slack
    }
}

/// Exact (unshifted) risk-set moments at time `t`.
pub fn snapshot(dataset: &SurvivalDataset, beta: &DVector<f64>, t: f64) -> Result<LikelihoodSnapshot> {
    check_dim(dataset, beta)?;
    let p = dataset.p;
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(p);
    let mut s2 = DMatrix::zeros(p, p);
    let mut any = false;
    for o in dataset.observations.iter().filter(|o| o.time >= t) {
        any = true;
        let z = DVector::from_column_slice(&o.covariates);
        let w = z.dot(beta).exp();
        s0 += w;
        s1.axpy(w, &z, 1.0);
        s2.ger(w, &z, &z, 1.0);
    }
    if !any {
        return Err(Error::EmptyRiskSet(t));
    }
    Ok(LikelihoodSnapshot {
        s0,
        s1,
        s2,
        at_time: t,
    })
}

fn check_dim(dataset: &SurvivalDataset, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != dataset.p {
        return Err(Error::Dimension(format!(
            "beta has length {}, dataset has p = {}",
            beta.len(),
            dataset.p
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidConfig("beta must be finite".into()));
    }
    Ok(())
}

/// Partial likelihood prepared for repeated evaluation on one dataset.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    design: DMatrix<f64>,
    events: Vec<bool>,
    /// Subjects grouped by identical follow-up time, latest time first.
    groups: Vec<Vec<usize>>,
    n: usize,
    p: usize,
}

impl PartialLikelihood {
    pub fn new(dataset: &SurvivalDataset) -> Self {
        let mut order: Vec<usize> = (0..dataset.n()).collect();
        let times: Vec<f64> = dataset.observations.iter().map(|o| o.time).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if times[g[0]] == times[i] => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        Self {
            design: dataset.design(),
            events: dataset.observations.iter().map(|o| o.event).collect(),
            groups,
            n: dataset.n(),
            p: dataset.p,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Linear predictors `Z_i'b`.
    pub fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.design * beta
    }

    /// One backward sweep over follow-up times computing `l_n`, `U_n`
    /// and `J_n`. Weights are kept relative to the running maximum of the
    /// linear predictor over the current risk set.
    pub fn evaluate(&self, beta: &DVector<f64>) -> Result<ScoreHessian> {
        if beta.len() != self.p {
            return Err(Error::Dimension(format!(
                "beta has length {}, dataset has p = {}",
                beta.len(),
                self.p
            )));
        }
        let p = self.p;
        let eta = self.linear_predictor(beta);
        let mut shift = f64::NEG_INFINITY;
        let mut s0 = 0.0;
        let mut s1 = DVector::<f64>::zeros(p);
        let mut s2 = DMatrix::<f64>::zeros(p, p);

        let mut loglik = 0.0;
        let mut score = DVector::<f64>::zeros(p);
        let mut hessian = DMatrix::<f64>::zeros(p, p);
        let mut mean = DVector::<f64>::zeros(p);

        for group in &self.groups {
            let group_max = group.iter().map(|&i| eta[i]).fold(f64::NEG_INFINITY, f64::max);
            if group_max > shift {
                let rescale = (shift - group_max).exp();
                s0 *= rescale;
                s1 *= rescale;
                s2 *= rescale;
                shift = group_max;
            }
            for &i in group {
                let w = (eta[i] - shift).exp();
                let z = self.design.row(i).transpose();
                s0 += w;
                s1.axpy(w, &z, 1.0);
                s2.ger(w, &z, &z, 1.0);
            }
            let n_events = group.iter().filter(|&&i| self.events[i]).count();
            if n_events == 0 {
                continue;
            }
            let d = n_events as f64;
            let log_s0 = shift + s0.ln();
            mean.copy_from(&s1);
            mean /= s0;
            for &i in group.iter().filter(|&&i| self.events[i]) {
                loglik += eta[i] - log_s0;
                score += self.design.row(i).transpose();
            }
            score.axpy(-d, &mean, 1.0);
            hessian += &s2 * (d / s0);
            hessian.ger(-d, &mean, &mean, 1.0);
        }
        let inv_n = 1.0 / self.n as f64;
        let hessian = (&hessian + hessian.transpose()) * (0.5 * inv_n);
        Ok(ScoreHessian {
            score: score * inv_n,
            hessian,
            loglik: loglik * inv_n,
        })
    }

    /// `max_{i,j} |h'Z_i - h'Z_j|`.
    pub fn spread(&self, h: &DVector<f64>) -> f64 {
        let v = &self.design * h;
        v.max() - v.min()
    }

    pub fn sandwich_check(&self, beta: &DVector<f64>, h: &DVector<f64>) -> Result<SandwichCheck> {
        let base = self.evaluate(beta)?;
        let moved = self.evaluate(&(beta + h))?;
        let eta = self.spread(h);
        let quad = h.dot(&(&base.hessian * h)).max(0.0);
        Ok(SandwichCheck {
            lower: (-eta).exp() * quad,
            middle: h.dot(&(&moved.score - &base.score)).abs(),
            upper: eta.exp() * quad,
            eta,
        })
    }
}

/// `l_n`, `U_n` and `J_n` at `beta`.
pub fn evaluate(dataset: &SurvivalDataset, beta: &DVector<f64>) -> Result<ScoreHessian> {
    check_dim(dataset, beta)?;
    PartialLikelihood::new(dataset).evaluate(beta)
}

pub fn sandwich_check(
    dataset: &SurvivalDataset,
    beta: &DVector<f64>,
    h: &DVector<f64>,
) -> Result<SandwichCheck> {
    check_dim(dataset, beta)?;
    check_dim(dataset, h)?;
    PartialLikelihood::new(dataset).sandwich_check(beta, h)
}

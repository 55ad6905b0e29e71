//! Dense two-phase tableau simplex for `min c'x  s.t.  Ax <= b, x >= 0`.
//!
//! Pivoting follows Bland's rule. The tableau is rebuilt from the current
//! basis every few dozen pivots and once more at the end, where the
//! basic solution and the duals are recomputed by LU solves. The returned
//! certificate is computed from these refined quantities only.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-11;
const REINVERT_EVERY: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpCertificate {
    /// `|c'x - b'y|` for the refined primal `x` and dual `y`.
    pub duality_gap: f64,
    /// Largest violation of `Ax <= b` or `x >= 0`.
    pub primal_infeasibility: f64,
    /// Largest negative reduced cost.
    pub dual_infeasibility: f64,
    pub pivots: usize,
}

impl LpCertificate {
    pub fn is_optimal(&self, tol: f64) -> bool {
        self.duality_gap <= tol && self.primal_infeasibility <= tol && self.dual_infeasibility <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    /// Nonnegative multipliers of `Ax <= b`.
    pub multipliers: DVector<f64>,
    pub objective: f64,
    pub certificate: LpCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    PivotLimit(usize),
}

struct Tableau {
    m: usize,
    ncol: usize,
    /// Row-major `m x (ncol + 1)`; the last column is the right-hand side.
    rows: Vec<f64>,
    basis: Vec<usize>,
    /// Standard-form matrix `[D A, D, artificials]` with `D = diag(sign)`.
    std: DMatrix<f64>,
    rhs: DVector<f64>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (self.ncol + 1) + j]
    }

    fn rhs_at(&self, i: usize) -> f64 {
        self.at(i, self.ncol)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.ncol + 1;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.rows[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.rows[r * w..(r + 1) * w].to_vec();
        for i in (0..self.m).filter(|&i| i != r) {
            let f = self.at(i, c);
            if f != 0.0 {
                for (v, pv) in self.rows[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[i * w + c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REINVERT_EVERY) {
            self.reinvert();
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, k| self.std[(i, self.basis[k])])
    }

    /// Recomputes `B^-1 [A | b]` from scratch for the current basis.
    fn reinvert(&mut self) {
        let lu = self.basis_matrix().lu();
        let (Some(body), Some(rhs)) = (lu.solve(&self.std), lu.solve(&self.rhs)) else {
            return;
        };
        let w = self.ncol + 1;
        for i in 0..self.m {
            for j in 0..self.ncol {
                self.rows[i * w + j] = body[(i, j)];
            }
            self.rows[i * w + self.ncol] = rhs[i].max(0.0);
            self.rows[i * w + self.basis[i]] = 1.0;
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(i, j);
                }
            }
        }
        d
    }

    /// Runs Bland's rule until optimal over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_pivots: usize) -> Result<(), LpFailure> {
        let scale = 1.0 + cost.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j] < -1e-11 * scale) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, enter);
                if a > PIVOT_EPS {
                    let ratio = self.rhs_at(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            // Objective is bounded below in every caller; an unbounded ray
            // can only come from round-off, so stop and let the certificate
            // report it.
            let Some((row, _)) = leave else {
                return Ok(());
            };
            if self.pivots >= max_pivots {
                return Err(LpFailure::PivotLimit(self.pivots));
            }
            self.pivot(row, enter);
        }
    }
}

/// Solves `min c'x  s.t.  Ax <= b, x >= 0`. The objective must be bounded
/// below on the feasible set.
pub fn solve_lp(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    max_pivots: usize,
) -> Result<LpSolution, LpFailure> {
    let (m, n) = a.shape();
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let art_rows: Vec<usize> = (0..m).filter(|&i| sign[i] < 0.0).collect();
    let k = art_rows.len();
    let ncol = n + m + k;
    let mut std = DMatrix::zeros(m, ncol);
    for i in 0..m {
        for j in 0..n {
            std[(i, j)] = sign[i] * a[(i, j)];
        }
        std[(i, n + i)] = sign[i];
    }
    for (t, &i) in art_rows.iter().enumerate() {
        std[(i, n + m + t)] = 1.0;
    }
    let rhs = DVector::from_fn(m, |i, _| sign[i] * b[i]);
    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    for (t, &i) in art_rows.iter().enumerate() {
        basis[i] = n + m + t;
    }
    let mut tab = Tableau {
        m,
        ncol,
        rows: vec![0.0; m * (ncol + 1)],
        basis,
        std,
        rhs,
        pivots: 0,
    };
    tab.reinvert();

    if k > 0 {
        let mut phase1 = vec![0.0; ncol];
        for v in &mut phase1[n + m..] {
            *v = 1.0;
        }
        tab.optimize(&phase1, ncol, max_pivots)?;
        tab.reinvert();
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n + m)
            .map(|i| tab.rhs_at(i))
            .sum();
        if infeasibility > 1e-9 * (1.0 + b.amax()) {
            return Err(LpFailure::Infeasible);
        }
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; ncol];
    cost[..n].copy_from_slice(c.as_slice());
    for _ in 0..3 {
        tab.optimize(&cost, n + m, max_pivots)?;
        tab.reinvert();
        if tab.reduced_costs(&cost)[..n + m].iter().all(|&d| d >= -1e-11) {
            break;
        }
    }
    Ok(refine(&tab, a, b, c, &sign))
}

fn refine(tab: &Tableau, a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, sign: &[f64]) -> LpSolution {
    let (m, n) = a.shape();
    let lu = tab.basis_matrix().lu();
    let xb = lu.solve(&tab.rhs).unwrap_or_else(|| DVector::from_fn(m, |i, _| tab.rhs_at(i)));
    let mut full = DVector::zeros(tab.ncol);
    for (i, &j) in tab.basis.iter().enumerate() {
        full[j] = xb[i];
    }
    let cb = DVector::from_fn(m, |i, _| if tab.basis[i] < n { c[tab.basis[i]] } else { 0.0 });
    let ybar = tab
        .basis_matrix()
        .transpose()
        .lu()
        .solve(&cb)
        .unwrap_or_else(|| DVector::zeros(m));
    // Duals of the original rows: y = D ybar, nonpositive at optimality.
    let y = DVector::from_fn(m, |i, _| sign[i] * ybar[i]);

    let x = DVector::from_fn(n, |j, _| full[j].max(0.0));
    let raw_neg = full.rows(0, n + m).iter().fold(0.0_f64, |acc, &v| acc.max(-v));
    let resid = a * &x - b;
    let primal = resid.iter().fold(raw_neg, |acc, &v| acc.max(v));
    let reduced = c - a.transpose() * &y;
    // Slack columns have reduced cost `-y_i`.
    let dual = reduced
        .iter()
        .copied()
        .chain(y.iter().map(|v| -v))
        .fold(0.0_f64, |acc, r| acc.max(-r));
    let objective = c.dot(&x);
    let dual_objective = b.dot(&y);
    LpSolution {
        x,
        multipliers: -y,
        objective,
        certificate: LpCertificate {
            duality_gap: (objective - dual_objective).abs(),
            primal_infeasibility: primal,
            dual_infeasibility: dual,
            pivots: tab.pivots,
        },
    }
}

//! Cone-restricted ratio objectives and the optimisers that minimise them.
//!
//! Every objective here is the square of a factor and is homogeneous of
//! degree zero, so points can be rescaled freely; each program fixes one
//! normalisation in `retract`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SupportSet;

/// Which denominator the squared ratio uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Denominator {
    /// `S * h'Mh / ||h_T0||_1^2` (compatibility factor).
    SupportL1,
    /// `S^{2/q} h'Mh / ||h||_q^2` (weak cone invertibility factor).
    Lq(f64),
    /// `h'Mh / ||h||_2^2` (restricted eigenvalue).
    L2,
    /// `h'Mh / ||h_T||_2^2` over `D_{T0,T}` (`phi_2S` inner problem).
    SupersetL2,
}

/// Squared-ratio objective over `C_T0`, optionally intersected with
/// `D_{T0,T}`.
pub(crate) struct ConeProgram<'a> {
    pub m: &'a DMatrix<f64>,
    pub support: &'a SupportSet,
    pub denominator: Denominator,
    /// `T \ T0` for the `phi_2S` inner problem; `None` means `T = T0`.
    pub extra: Option<&'a [usize]>,
    in_support: Vec<bool>,
    in_superset: Vec<bool>,
    scale: f64,
}

pub(crate) fn lq_norm(h: &[f64], q: f64) -> f64 {
    let m = h.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return h.iter().map(|x| x.abs()).sum();
    }
    m * h.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

impl<'a> ConeProgram<'a> {
    pub fn new(
        m: &'a DMatrix<f64>,
        support: &'a SupportSet,
        denominator: Denominator,
        extra: Option<&'a [usize]>,
    ) -> Self {
        let p = m.nrows();
        let mut in_support = vec![false; p];
        for &j in support.indices() {
            in_support[j] = true;
        }
        let mut in_superset = in_support.clone();
        if let Some(extra) = extra {
            for &j in extra {
                in_superset[j] = true;
            }
        }
        let s = support.len() as f64;
        let scale = match denominator {
            Denominator::SupportL1 => s,
            Denominator::Lq(q) => s.powf(2.0 / q),
            Denominator::L2 | Denominator::SupersetL2 => 1.0,
        };
        Self {
            m,
            support,
            denominator,
            extra,
            in_support,
            in_superset,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn quad(&self, h: &DVector<f64>) -> f64 {
        h.dot(&(self.m * h)).max(0.0)
    }

    fn denom(&self, h: &DVector<f64>) -> f64 {
        match self.denominator {
            Denominator::SupportL1 => self.support.indices().iter().map(|&j| h[j].abs()).sum(),
            Denominator::Lq(q) => lq_norm(h.as_slice(), q),
            Denominator::L2 => h.norm(),
            Denominator::SupersetL2 => h
                .iter()
                .zip(&self.in_superset)
                .filter(|(_, &t)| t)
                .map(|(x, _)| x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Squared factor ratio at `h`; `None` if `h` is outside the feasible
    /// set or the denominator vanishes.
    pub fn value(&self, h: &DVector<f64>) -> Option<f64> {
        if !self.is_feasible(h, 1e-9) {
            return None;
        }
        self.raw_value(h)
    }

    fn raw_value(&self, h: &DVector<f64>) -> Option<f64> {
        let d = self.denom(h);
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        Some(self.scale * self.quad(h) / (d * d))
    }

    fn gradient(&self, h: &DVector<f64>) -> DVector<f64> {
        let d = self.denom(h);
        let quad = self.quad(h);
        let mut g = (self.m * h) * (2.0 * self.scale / (d * d));
        let coef = -2.0 * self.scale * quad / (d * d * d);
        match self.denominator {
            Denominator::SupportL1 => {
                for &j in self.support.indices() {
                    g[j] += coef * h[j].signum() * f64::from(u8::from(h[j] != 0.0));
                }
            }
            Denominator::Lq(q) => {
                for j in 0..h.len() {
                    let a = h[j].abs();
                    if a > 0.0 {
                        g[j] += coef * h[j].signum() * (a / d).powf(q - 1.0);
                    }
                }
            }
            Denominator::L2 => g.axpy(coef / d, h, 1.0),
            Denominator::SupersetL2 => {
                for j in 0..h.len() {
                    if self.in_superset[j] {
                        g[j] += coef * h[j] / d;
                    }
                }
            }
        }
        g
    }

    fn support_l1(&self, h: &DVector<f64>) -> f64 {
        self.support.indices().iter().map(|&j| h[j].abs()).sum()
    }

    fn off_support_l1(&self, h: &DVector<f64>) -> f64 {
        h.iter()
            .zip(&self.in_support)
            .filter(|(_, &t)| !t)
            .map(|(x, _)| x.abs())
            .sum()
    }

    /// Membership in `C_T0` (and `D_{T0,T}` when applicable), with relative
    /// slack `tol`.
    pub fn is_feasible(&self, h: &DVector<f64>, tol: f64) -> bool {
        let on = self.support_l1(h);
        if !(on > 0.0) {
            return false;
        }
        if self.off_support_l1(h) > on * (1.0 + tol) {
            return false;
        }
        if let Some(level) = self.clip_level(h) {
            let scale = h.amax();
            for j in 0..h.len() {
                if !self.in_superset[j] && h[j].abs() > level + tol * scale {
                    return false;
                }
            }
        }
        true
    }

    fn clip_level(&self, h: &DVector<f64>) -> Option<f64> {
        let extra = self.extra?;
        if extra.is_empty() {
            return None;
        }
        Some(extra.iter().map(|&j| h[j].abs()).fold(f64::INFINITY, f64::min))
    }

    /// Maps `h` into the feasible set and normalises it. Returns `false`
    /// when no feasible representative exists (`h_T0 = 0`).
    pub fn retract(&self, h: &mut DVector<f64>) -> bool {
        if let Some(level) = self.clip_level(h) {
            for j in 0..h.len() {
                if !self.in_superset[j] {
                    h[j] = h[j].clamp(-level, level);
                }
            }
        }
        let on = self.support_l1(h);
        if !(on > 0.0) || !on.is_finite() {
            return false;
        }
        let off = self.off_support_l1(h);
        if off > on {
            let shrink = on / off;
            for j in 0..h.len() {
                if !self.in_support[j] {
                    h[j] *= shrink;
                }
            }
        }
        let norm = match self.denominator {
            Denominator::SupportL1 | Denominator::Lq(_) => on,
            Denominator::L2 | Denominator::SupersetL2 => h.norm(),
        };
        *h /= norm;
        true
    }

    /// Random feasible point. Mixes interior points, cone-boundary points
    /// and sparse off-support patterns.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
        let p = self.dim();
        let mut h = DVector::<f64>::zeros(p);
        for &j in self.support.indices() {
            h[j] = rng.sample(StandardNormal);
        }
        if let Some(extra) = self.extra {
            for &j in extra {
                h[j] = rng.sample(StandardNormal);
            }
        }
        let mut free: Vec<usize> = (0..p).filter(|&j| !self.in_superset[j]).collect();
        if !free.is_empty() {
            free.shuffle(rng);
            let k = rng.random_range(0..=free.len());
            let level = self.clip_level(&h);
            for &j in &free[..k] {
                let v: f64 = rng.sample(StandardNormal);
                h[j] = match level {
                    Some(l) => l * rng.random_range(-1.0..=1.0),
                    None => v,
                };
            }
        }
        // push the off-support mass to a random fraction of the cone budget
        let on = self.support_l1(&h);
        let off = self.off_support_l1(&h);
        if off > 0.0 && self.extra.is_none() {
            let u: f64 = if rng.random::<f64>() < 0.3 {
                1.0
            } else {
                rng.random()
            };
            let target = u * on;
            for j in 0..p {
                if !self.in_support[j] {
                    h[j] *= target / off;
                }
            }
        }
        self.retract(&mut h).then_some(h)
    }
}

/// Projected gradient descent with adaptive step on the normalised
/// feasible set. Returns the best value seen and its point.
pub(crate) fn descend(
    program: &ConeProgram<'_>,
    start: DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Option<(f64, DVector<f64>)> {
    let mut h = start;
    if !program.retract(&mut h) {
        return None;
    }
    let mut f = program.raw_value(&h)?;
    let mut step = 0.1;
    let mut stall = 0;
    for _ in 0..max_iter {
        let g = program.gradient(&h);
        let gn = g.norm();
        if !(gn > 0.0) || !gn.is_finite() {
            break;
        }
        let hn = h.norm();
        let mut candidate = &h - &g * (step * hn / gn);
        let accepted = program.retract(&mut candidate)
            && match program.raw_value(&candidate) {
                Some(fc) if fc < f => {
                    let rel = (f - fc) / f.max(1e-300);
                    h = candidate;
                    f = fc;
                    stall = if rel < tol { stall + 1 } else { 0 };
                    true
                }
                _ => false,
            };
        if accepted {
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if stall >= 10 || f == 0.0 {
            break;
        }
    }
    Some((f, h))
}

/// Structured starting points: unit vectors and equal-magnitude sign
/// patterns on `T0`, plus eigenvectors of `M` mapped into the cone.
pub(crate) fn structured_starts(program: &ConeProgram<'_>) -> Vec<DVector<f64>> {
    let p = program.dim();
    let t = program.support.indices();
    let mut starts = Vec::new();
    for &j in t {
        starts.push(DVector::from_fn(p, |i, _| f64::from(u8::from(i == j))));
    }
    let patterns = 1usize << (t.len().min(8) - 1);
    for mask in 0..patterns {
        let mut h = DVector::zeros(p);
        for (k, &j) in t.iter().enumerate() {
            h[j] = if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
        }
        if let Some(extra) = program.extra {
            for &j in extra {
                h[j] = 1.0;
            }
        }
        starts.push(h);
    }
    let eig = nalgebra::SymmetricEigen::new(program.m.clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    for &k in order.iter().take(3) {
        let v = eig.eigenvectors.column(k).into_owned();
        starts.push(v.clone());
        starts.push(-v);
    }
    starts
}

/// Dense random sampling of the feasible set; an independent upper bound
/// on the infimum.
pub(crate) fn sample_oracle(
    program: &ConeProgram<'_>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, DVector<f64>)> {
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..samples {
        let Some(h) = program.sample(rng) else { continue };
        let Some(v) = program.raw_value(&h) else { continue };
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, h));
        }
    }
    best
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Euclidean projection onto the unit l1 ball.
fn project_l1_ball(v: &mut [f64]) {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
        return;
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    project_simplex(&mut a);
    for (x, m) in v.iter_mut().zip(a) {
        *x = x.signum() * m;
    }
}

/// Minimum of `h'Mh` over `{sign(h_T0) = signs, ||h_T0||_1 = 1,
/// ||h_T0^c||_1 <= 1}`, a convex problem, by accelerated projected
/// gradient.
pub(crate) fn signed_cone_qp(
    m: &DMatrix<f64>,
    support: &SupportSet,
    signs: &[f64],
    lipschitz: f64,
    max_iter: usize,
) -> (f64, DVector<f64>) {
    let p = m.nrows();
    let t = support.indices();
    let off: Vec<usize> = (0..p).filter(|j| !support.contains(*j)).collect();
    let project = |h: &mut DVector<f64>| {
        let mut x: Vec<f64> = t.iter().zip(signs).map(|(&j, s)| s * h[j]).collect();
        project_simplex(&mut x);
        for ((&j, s), v) in t.iter().zip(signs).zip(x) {
            h[j] = s * v;
        }
        let mut y: Vec<f64> = off.iter().map(|&j| h[j]).collect();
        project_l1_ball(&mut y);
        for (&j, v) in off.iter().zip(y) {
            h[j] = v;
        }
    };
    let mut x = DVector::zeros(p);
    for (&j, s) in t.iter().zip(signs) {
        x[j] = s / t.len() as f64;
    }
    let value = |h: &DVector<f64>| h.dot(&(m * h)).max(0.0);
    if lipschitz <= 0.0 {
        return (value(&x), x);
    }
    let step = 1.0 / lipschitz;
    let mut y = x.clone();
    let mut tk = 1.0_f64;
    let mut fx = value(&x);
    for _ in 0..max_iter {
        let mut next = &y - (m * &y) * (2.0 * step);
        project(&mut next);
        let fnext = value(&next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        if fnext > fx {
            // adaptive restart
            y = x.clone();
            tk = 1.0;
            continue;
        }
        let moved = (&next - &x).amax();
        y = &next + (&next - &x) * ((tk - 1.0) / t_next);
        x = next;
        let improved = fx - fnext;
        fx = fnext;
        tk = t_next;
        if moved < 1e-13 || improved.abs() <= 1e-16 * fx.max(1e-300) && moved < 1e-10 {
            break;
        }
    }
    (fx, x)
}

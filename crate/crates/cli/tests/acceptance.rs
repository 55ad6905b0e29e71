//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`; pass criterion numbers after
//! `--` to run a subset.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hazard_dantzig::bounds::{
    calibrate_k2, constants_from_truth, run_experiment, score_sup_norms, tail_bound, ExperimentConfig, TailEstimate,
};
use hazard_dantzig::dantzig::{gamma_schedule, l1_min_under_linf, solve_dsfph, SolverConfig, Status};
use hazard_dantzig::factors::{
    compatibility_factor, factor_report, population_matrix, restricted_eigenvalue, restricted_isometry,
    restricted_orthogonality, sup_norm_diff, weak_cone_invertibility_factor, EnumerationMode,
    FactorOptions, ReportRequest, SupportSet,
};
use hazard_dantzig::partial_likelihood::PartialLikelihood;
use hazard_dantzig::seed::{replicate_seed, stream_seed};
use hazard_dantzig::survival_sim::{simulate_dataset, Baseline, CovariateLaw, SimConfig, SurvivalDataset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn sim(n: usize, p: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        p,
        s: 3,
        beta0_values: vec![1.0, -1.0, 1.0],
        baseline: Baseline::Constant { rate: 1.0 },
        censor_rate: 0.25,
        covariate_law: CovariateLaw::Uniform { half_width: 1.0 },
        k1: 1.01,
        tau: 4.0,
        seed,
    }
}

fn small_sim(n: usize, p: usize, seed: u64) -> SimConfig {
    let s = p.min(2);
    SimConfig {
        s,
        beta0_values: vec![0.7; s],
        ..sim(n, p, seed)
    }
}

fn random_vec(p: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(p, |_, _| rng.random_range(-scale..scale))
}

fn random_small_dataset(rng: &mut ChaCha8Rng) -> SurvivalDataset {
    loop {
        let n = rng.random_range(10..=50);
        let p = rng.random_range(2..=8);
        if let Ok(d) = simulate_dataset(&small_sim(n, p, rng.random())) {
            return d;
        }
    }
}

/// Log partial likelihood straight from its definition.
fn naive_loglik(data: &SurvivalDataset, beta: &DVector<f64>) -> f64 {
    let eta: Vec<f64> = data
        .observations
        .iter()
        .map(|o| o.covariates.iter().zip(beta.iter()).map(|(z, b)| z * b).sum())
        .collect();
    let mut total = 0.0;
    for (i, o) in data.observations.iter().enumerate().filter(|(_, o)| o.event) {
        let risk: f64 = data
            .observations
            .iter()
            .zip(&eta)
            .filter(|(k, _)| k.time >= o.time)
            .map(|(_, e)| e.exp())
            .sum();
        total += eta[i] - risk.ln();
    }
    total / data.n() as f64
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-5;
    let (mut worst_u, mut worst_j) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let data = random_small_dataset(&mut rng);
        let model = PartialLikelihood::new(&data);
        let beta = random_vec(data.p, 1.0, &mut rng);
        let ev = model.evaluate(&beta).unwrap();
        let p = data.p;
        let mut fd_u = DVector::zeros(p);
        let mut fd_j = DMatrix::zeros(p, p);
        for k in 0..p {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[k] += h;
            minus[k] -= h;
            fd_u[k] = (naive_loglik(&data, &plus) - naive_loglik(&data, &minus)) / (2.0 * h);
            let du = (model.evaluate(&plus).unwrap().score - model.evaluate(&minus).unwrap().score) / (2.0 * h);
            fd_j.set_column(k, &du);
        }
        worst_u = worst_u.max((&ev.score - fd_u).amax() / (1e-6 * (1.0 + ev.score.amax())));
        worst_j = worst_j.max((&ev.hessian + fd_j).amax() / (1e-5 * (1.0 + ev.hessian.amax())));
    }
    Outcome::new(
        worst_u <= 1.0 && worst_j <= 1.0,
        format!("worst score error {worst_u:.2e} x tol, worst information error {worst_j:.2e} x tol"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst_eig = f64::INFINITY;
    let mut concave_fail = 0;
    for _ in 0..100 {
        let data = random_small_dataset(&mut rng);
        let model = PartialLikelihood::new(&data);
        let beta = random_vec(data.p, 3.0, &mut rng);
        let j = model.evaluate(&beta).unwrap().hessian;
        let min_eig = j.symmetric_eigenvalues().min();
        worst_eig = worst_eig.min(min_eig + 1e-10 * j.trace());
        let a = random_vec(data.p, 3.0, &mut rng);
        let b = random_vec(data.p, 3.0, &mut rng);
        let la = model.evaluate(&a).unwrap().loglik;
        let lb = model.evaluate(&b).unwrap().loglik;
        let lm = model.evaluate(&((&a + &b) * 0.5)).unwrap().loglik;
        if lm < 0.5 * (la + lb) - 1e-12 * (1.0 + la.abs() + lb.abs()) {
            concave_fail += 1;
        }
    }
    Outcome::new(
        worst_eig >= 0.0 && concave_fail == 0,
        format!("min(lambda_min + 1e-10 tr) = {worst_eig:.3e}, midpoint violations {concave_fail}/100"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut failures = 0;
    let mut max_eta: f64 = 0.0;
    for _ in 0..100 {
        let data = random_small_dataset(&mut rng);
        let model = PartialLikelihood::new(&data);
        let beta = random_vec(data.p, 1.5, &mut rng);
        let h = random_vec(data.p, 1.5, &mut rng);
        let c = model.sandwich_check(&beta, &h).unwrap();
        max_eta = max_eta.max(c.eta);
        let slack = 1e-8 * (1.0 + c.upper);
        if !(c.lower <= c.middle + slack && c.middle <= c.upper + slack) {
            failures += 1;
        }
    }
    Outcome::new(failures == 0, format!("violations {failures}/100, largest eta {max_eta:.2}"))
}

fn criterion_4() -> Outcome {
    let opts = FactorOptions::default();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |label: &str, got: f64, want: f64, tol: f64| {
        let good = (got - want).abs() <= tol;
        ok &= good;
        if !good {
            notes.push(format!("{label}: got {got}, want {want}"));
        }
    };
    let eye = DMatrix::<f64>::identity(6, 6);
    let t2 = SupportSet::new(vec![0, 3], 6).unwrap();
    let t1 = SupportSet::new(vec![2], 6).unwrap();
    check("kappa(I)", compatibility_factor(&eye, &t2, &opts).unwrap(), 1.0, 1e-3);
    check("RE(I)", restricted_eigenvalue(&eye, &t2, &opts).unwrap(), 1.0, 1e-3);
    check("F2(I), |T0| = 1", weak_cone_invertibility_factor(&eye, &t1, 2.0, &opts).unwrap(), 1.0, 1e-3);
    for n in 1..=4 {
        check("delta_N(I)", restricted_isometry(&eye, n, EnumerationMode::default()).unwrap().value, 0.0, 0.0);
    }
    check("theta(I)", restricted_orthogonality(&eye, 2, 3, EnumerationMode::default()).unwrap().value, 0.0, 0.0);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.5, 0.4, 1.7, 3.0]));
    let t = SupportSet::new(vec![0], 4).unwrap();
    check("kappa(diag), T0 = {1}", compatibility_factor(&d, &t, &opts).unwrap(), 2.5f64.sqrt(), 1e-3);
    check("delta_1(diag)", restricted_isometry(&d, 1, EnumerationMode::default()).unwrap().value, 2.0, 1e-12);
    check("theta(diag)", restricted_orthogonality(&d, 1, 2, EnumerationMode::default()).unwrap().value, 0.0, 0.0);
    for eps in [0.0, 0.2, 0.6] {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, eps]));
        let t = SupportSet::new(vec![0], 2).unwrap();
        check("RE(diag(1, eps))", restricted_eigenvalue(&m, &t, &opts).unwrap(), ((1.0 + eps) / 2.0).sqrt(), 1e-3);
    }
    let rho = -0.35;
    let pair = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    check("delta_2(rho)", restricted_isometry(&pair, 2, EnumerationMode::default()).unwrap().value, 0.35, 1e-12);
    check("theta_11(rho)", restricted_orthogonality(&pair, 1, 1, EnumerationMode::default()).unwrap().value, 0.35, 1e-12);
    let detail = if notes.is_empty() { "all identities within tolerance".to_string() } else { notes.join("; ") };
    Outcome::new(ok, detail)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let p = 10;
    let t = SupportSet::new(vec![0, 1, 2], p).unwrap();
    let s = 3f64;
    let opts = FactorOptions::default();
    let request = ReportRequest {
        qs: vec![1.0, 2.0, 4.0],
        ..ReportRequest::default()
    };
    let mut violations = Vec::new();
    let mut uup_checked = 0;
    let mut worst_fq = f64::INFINITY;
    for i in 0..20 {
        let k = [20, 40, 80, 160, 400][i % 5];
        let b = DMatrix::from_fn(k, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = b.transpose() * &b / k as f64;
        let m = (&m + m.transpose()) * 0.5;
        let r = factor_report(&m, &t, &opts, &request).unwrap();
        for (q, f) in &r.f_q {
            worst_fq = worst_fq.min(f - r.kappa);
            if r.kappa > f + 1e-4 {
                violations.push(format!("#{i} kappa {:.4} > F_{q} {f:.4}", r.kappa));
            }
        }
        if r.kappa > 2.0 * s.sqrt() * r.re + 1e-4 {
            violations.push(format!("#{i} kappa > 2 sqrt(S) RE"));
        }
        let phi = r.phi_2s.unwrap();
        if r.kappa + 1e-4 < phi {
            violations.push(format!("#{i} kappa < phi_2S"));
        }
        let margin = r.uup_margin.unwrap();
        if margin > 0.05 {
            uup_checked += 1;
            if phi <= 1e-6 {
                violations.push(format!("#{i} margin {margin:.3} but phi_2S = {phi:e}"));
            }
        }
    }
    let kinds = |pat: &str| violations.iter().filter(|v| v.contains(pat)).count();
    let mut detail = format!(
        "{} violations (kappa > F_q: {}, kappa > 2 sqrt(S) RE: {}, kappa < phi_2S: {}, UUP without phi: {}); min(F_q - kappa) = {worst_fq:.4}; UUP margin > 0.05 on {uup_checked}/20",
        violations.len(),
        kinds("> F_"),
        kinds("RE"),
        kinds("< phi"),
        kinds("margin")
    );
    if !violations.is_empty() {
        detail.push_str(&format!(" [{}]", violations.iter().take(4).cloned().collect::<Vec<_>>().join("; ")));
    }
    Outcome::new(violations.is_empty(), detail)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut zero_ok = true;
    for _ in 0..50 {
        let p = rng.random_range(1..=12);
        let r = random_vec(p, 2.0, &mut rng);
        let gamma = rng.random_range(0.0..1.5);
        let sol = l1_min_under_linf(&DMatrix::identity(p, p), &r, gamma).unwrap();
        worst_gap = worst_gap.max(sol.certificate.duality_gap);
        for j in 0..p {
            let expect = r[j].signum() * (r[j].abs() - gamma).max(0.0);
            worst = worst.max((sol.beta[j] - expect).abs());
        }
        let big = l1_min_under_linf(&DMatrix::identity(p, p), &r, r.amax() * (1.0 + rng.random::<f64>())).unwrap();
        zero_ok &= big.beta.iter().all(|&b| b == 0.0);
    }
    for _ in 0..50 {
        let p = rng.random_range(2..=15);
        let b = DMatrix::from_fn(p + 5, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let g = b.transpose() * b / (p + 5) as f64;
        let r = random_vec(p, 1.0, &mut rng);
        let sol = l1_min_under_linf(&g, &r, rng.random_range(0.0..0.3)).unwrap();
        worst_gap = worst_gap.max(sol.certificate.duality_gap);
    }
    Outcome::new(
        worst <= 1e-6 && zero_ok && worst_gap <= 1e-8,
        format!("max soft-threshold error {worst:.2e}, exact zeros {zero_ok}, max duality gap {worst_gap:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let base = sim(200, 20, 7);
    let cal = calibrate_k2(&base.with_seed(stream_seed(7, "pilot")), 0.5, 0.95, 200).unwrap();
    let gamma = gamma_schedule(200, 20, cal.k2, 0.5).unwrap();
    let beta0 = base.beta0();
    let support = SupportSet::leading(3, 20).unwrap();
    let results: Vec<(bool, bool, bool, Status)> = (0..50u64)
        .map(|r| {
            let data = simulate_dataset(&base.with_seed(replicate_seed(stream_seed(7, "contract"), r))).unwrap();
            let feasible = PartialLikelihood::new(&data).evaluate(&beta0).unwrap().score.amax() <= gamma;
            let fit = solve_dsfph(&data, &SolverConfig::with_gamma(gamma)).unwrap();
            let h = fit.beta() - &beta0;
            (feasible, fit.objective <= beta0.lp_norm(1) + 1e-6, support.in_cone(&h, 1e-6), fit.status)
        })
        .collect();
    let feasible: Vec<_> = results.iter().filter(|r| r.0).collect();
    let rate = feasible.len() as f64 / 50.0;
    let norm_fail = feasible.iter().filter(|r| !r.1).count();
    let cone_fail = feasible.iter().filter(|r| !r.2).count();
    let solver_infeasible = feasible.iter().filter(|r| r.3 == Status::Infeasible).count();
    Outcome::new(
        rate >= 0.9 && norm_fail == 0 && cone_fail == 0,
        format!(
            "K2 = {:.3}, gamma = {gamma:.4}, truth feasible {}/50, l1 violations {norm_fail}, cone violations {cone_fail}, solver-infeasible {solver_infeasible}",
            cal.k2,
            feasible.len()
        ),
    )
}

fn experiment_config() -> ExperimentConfig {
    let json = r#"{
        "n_grid": [200, 400, 800],
        "p": 50,
        "S": 3,
        "beta0_values": [1.0, -1.0, 1.0],
        "baseline": {"kind": "constant", "rate": 1.0},
        "censor_rate": 0.25,
        "covariate_law": {"kind": "uniform", "half_width": 1.0},
        "K1": 1.01,
        "tau": 4.0,
        "alpha": 0.5,
        "reps": 20,
        "seed": 8,
        "calibration": {"reps": 200, "level": 0.95},
        "population": {"n_big": 20000, "mc_reps": 4}
    }"#;
    serde_json::from_str(json).unwrap()
}

fn criteria_8_and_9() -> (Outcome, Outcome) {
    let report = run_experiment(&experiment_config()).unwrap();
    let medians: Vec<f64> = report.summaries.iter().map(|s| s.median_err_l2).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let eight = Outcome::new(
        decreasing && report.failures.is_empty(),
        format!(
            "K2 = {:.3}; median ||b - b0||_2 by n: {}; failed reps {}",
            report.k2,
            report
                .summaries
                .iter()
                .map(|s| format!("{}: {:.4}", s.n, s.median_err_l2))
                .collect::<Vec<_>>()
                .join(", "),
            report.failures.len()
        ),
    );
    let tally = |f: fn(&hazard_dantzig::bounds::NSummary) -> (usize, usize)| {
        report.summaries.iter().map(f).fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    let (e44, s44) = tally(|s| (s.thm44.eligible, s.thm44.satisfied));
    let (e45, s45) = tally(|s| (s.thm45_l1.eligible, s.thm45_l1.satisfied));
    let rate = |e: usize, s: usize| if e == 0 { None } else { Some(s as f64 / e as f64) };
    let ok = |r: Option<f64>| r.is_some_and(|v| v >= 0.95);
    let f = &report.factors;
    let nine = Outcome::new(
        ok(rate(e44, s44)) && ok(rate(e45, s45)),
        format!(
            "l2^2 bound {s44}/{e44}, l1 bound {s45}/{e45}; surrogate RE {:.4}, kappa {:.4}, stderr {:.2e}; kappa^2 = {:.4} vs 4 S median eps_n = {}; K4 {:.3e}, K5 {:.3e}",
            f.re,
            f.kappa,
            f.stderr_sup.unwrap_or(f64::NAN),
            f.kappa * f.kappa,
            report
                .summaries
                .iter()
                .map(|s| format!("{:.4}", 4.0 * report.config.s as f64 * s.median_eps_n))
                .collect::<Vec<_>>()
                .join("/"),
            report.constants.k4,
            report.constants.k5
        ),
    );
    (eight, nine)
}

fn criterion_10() -> Outcome {
    let p = 10;
    let base = small_sim(200, p, 10);
    let constants = constants_from_truth(&base.beta0(), base.k1, &base).unwrap();
    let ns = [200, 800, 3200];
    let norms: Vec<Vec<f64>> = ns.iter().map(|&n| score_sup_norms(&base.with_n(n), 500, "acceptance-tail").unwrap()).collect();
    let mut compared = 0;
    let mut violations = 0;
    for (i, &n) in ns.iter().enumerate() {
        for gamma in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let bound = tail_bound(gamma, n, p, constants.k1, constants.k3);
            if bound.union >= 1.0 {
                continue;
            }
            compared += 1;
            let est = TailEstimate::from_norms(&norms[i], gamma);
            if est.probability > bound.union + est.half_width() {
                violations += 1;
            }
        }
    }
    let alpha = 0.3;
    let cal = calibrate_k2(&base.with_seed(stream_seed(10, "pilot")), alpha, 0.7, 500).unwrap();
    let probs: Vec<f64> = ns
        .iter()
        .zip(&norms)
        .map(|(&n, v)| TailEstimate::from_norms(v, gamma_schedule(n, p, cal.k2, alpha).unwrap()).probability)
        .collect();
    let monotone = probs.windows(2).all(|w| w[1] <= w[0]);
    Outcome::new(
        compared > 0 && violations == 0 && monotone,
        format!(
            "{compared} (n, gamma) pairs with union bound < 1, {violations} violations; P(||U|| >= gamma_n) at alpha = {alpha}: {}",
            probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" >= ")
        ),
    )
}

fn criterion_11() -> Outcome {
    let p = 10;
    let base = small_sim(200, p, 11);
    let beta0 = base.beta0();
    let pop = population_matrix(&base.with_seed(stream_seed(11, "population")), &beta0, 20_000, 10).unwrap();
    let mut medians = Vec::new();
    for n in [200, 800, 3200] {
        let mut eps: Vec<f64> = (0..20u64)
            .map(|r| {
                let cfg = base.with_n(n).with_seed(replicate_seed(stream_seed(11, &format!("eps{n}")), r));
                let data = simulate_dataset(&cfg).unwrap();
                let j = PartialLikelihood::new(&data).evaluate(&beta0).unwrap().hessian;
                sup_norm_diff(&j, &pop.matrix).unwrap()
            })
            .collect();
        eps.sort_by(f64::total_cmp);
        medians.push(0.5 * (eps[9] + eps[10]));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        decreasing,
        format!(
            "median eps_n at n = 200, 800, 3200: {}; surrogate stderr {:.2e}",
            medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", "),
            pop.stderr_sup.unwrap_or(f64::NAN)
        ),
    )
}

fn run_cli(args: &[&str], jobs: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hazard-dantzig"))
        .args(args)
        .env("HAZARD_DANTZIG_JOBS", jobs)
        .status()
        .is_ok_and(|s| s.success())
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = serde_json::json!({
        "n_grid": [150, 300],
        "p": 12,
        "S": 2,
        "beta0_values": [0.8, -0.8],
        "baseline": {"kind": "weibull", "shape": 1.5, "scale": 1.0},
        "censor_rate": 0.2,
        "covariate_law": {"kind": "uniform", "half_width": 1.0},
        "K1": 1.01,
        "tau": 3.0,
        "alpha": 0.5,
        "reps": 6,
        "seed": 12,
        "calibration": {"reps": 50, "level": 0.9},
        "population": {"n_big": 2000, "mc_reps": 2},
        "factor_options": {"restarts": 16, "oracle_samples": 5000}
    });
    let cfg_path = d.join("exp.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let (a, b) = (d.join("a"), d.join("b"));
    let mut ok = run_cli(&["experiment", "--config", &s(&cfg_path), "--out", &s(&a)], "1")
        && run_cli(&["experiment", "--config", &s(&cfg_path), "--out", &s(&b)], "4");
    let mut compared = Vec::new();
    for f in ["report.json", "replications.csv"] {
        let same = same_bytes(&a.join(f), &b.join(f));
        ok &= same;
        compared.push(format!("{f} {}", if same { "identical" } else { "DIFFERENT" }));
    }
    let sim_a = d.join("sim_a.csv");
    let sim_b = d.join("sim_b.csv");
    ok &= run_cli(&["simulate", "--n", "80", "--p", "6", "--s", "2", "--seed", "5", "--out", &s(&sim_a)], "2");
    let replay_src = d.join("sim_a.csv.manifest.json");
    std::fs::copy(&sim_a, &sim_b).unwrap();
    ok &= run_cli(&["replay", "--manifest", &s(&replay_src)], "3");
    let replay_same = same_bytes(&sim_a, &sim_b);
    ok &= replay_same;
    compared.push(format!("simulate replay {}", if replay_same { "identical" } else { "DIFFERENT" }));
    let replay_exp = a.join("manifest.json");
    let before = std::fs::read(a.join("report.json")).unwrap_or_default();
    ok &= run_cli(&["replay", "--manifest", &s(&replay_exp)], "2");
    let exp_same = std::fs::read(a.join("report.json")).is_ok_and(|x| x == before);
    ok &= exp_same;
    compared.push(format!("experiment replay {}", if exp_same { "identical" } else { "DIFFERENT" }));
    Outcome::new(ok, compared.join(", "))
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |id: u32| selected.is_empty() || selected.contains(&id);
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "score and information match finite differences", limit: Some(secs(10)), run: criterion_1 },
        Criterion { id: 2, name: "information is PSD, log partial likelihood concave", limit: Some(secs(10)), run: criterion_2 },
        Criterion { id: 3, name: "exponential sandwich inequality", limit: Some(secs(10)), run: criterion_3 },
        Criterion { id: 4, name: "factor identities on closed-form matrices", limit: Some(secs(30)), run: criterion_4 },
        Criterion { id: 5, name: "factor orderings on random PSD matrices", limit: Some(secs(300)), run: criterion_5 },
        Criterion { id: 6, name: "inner LP equals soft threshold, zero and duality gap", limit: Some(secs(30)), run: criterion_6 },
        Criterion { id: 7, name: "estimator l1 minimality and cone membership", limit: Some(secs(300)), run: criterion_7 },
    ];
    let mut failed = 0;
    let mut report = |id: u32, name: &str, elapsed: Duration, limit: Option<Duration>, out: Outcome| {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        let time_note = if in_time { String::new() } else { " [over time limit]".to_string() };
        println!(
            "[{}] {id:>2} {name} ({:.1} s){time_note}: {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            out.detail
        );
    };
    for c in criteria.iter().filter(|c| wants(c.id)) {
        let t = Instant::now();
        let out = (c.run)();
        report(c.id, c.name, t.elapsed(), c.limit, out);
    }
    if wants(8) || wants(9) {
        let t = Instant::now();
        let (eight, nine) = criteria_8_and_9();
        let el = t.elapsed();
        if wants(8) {
            report(8, "median l2 error decreases with n", el, Some(secs(900)), eight);
        }
        if wants(9) {
            report(9, "error bounds hold on feasible, non-vacuous replications", el, Some(secs(900)), nine);
        }
    }
    let tail = [
        Criterion { id: 10, name: "score tail below union bound, decreasing in n", limit: Some(secs(600)), run: criterion_10 },
        Criterion { id: 11, name: "eps_n median decreases with n", limit: Some(secs(300)), run: criterion_11 },
        Criterion { id: 12, name: "identical manifests give byte-identical outputs", limit: None, run: criterion_12 },
    ];
    for c in tail.iter().filter(|c| wants(c.id)) {
        let t = Instant::now();
        let out = (c.run)();
        report(c.id, c.name, t.elapsed(), c.limit, out);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

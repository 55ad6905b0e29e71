use super::*;
use crate::survival_sim::{Baseline, CovariateLaw};
use approx::assert_abs_diff_eq;

fn sim(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        p: 5,
        s: 2,
        beta0_values: vec![0.5, -0.5],
        baseline: Baseline::Constant { rate: 1.0 },
        censor_rate: 0.2,
        covariate_law: CovariateLaw::Uniform { half_width: 0.9 },
        k1: 1.0,
        tau: 3.0,
        seed,
    }
}

#[test]
fn constants_examples() {
    let cfg = sim(100, 0);
    let c = constants_from_truth(&DVector::zeros(5), 1.0, &cfg).unwrap();
    assert_eq!(c.k4, 0.0);
    assert_eq!(c.k5, 2.0);
    assert_abs_diff_eq!(c.baseline_integral, 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(c.k3, 4.0 * 3.0, epsilon = 1e-12);
    let unit = DVector::from_vec(vec![0.5, -0.5, 0.0, 0.0, 0.0]);
    let c = constants_from_truth(&unit, 1.0, &cfg).unwrap();
    assert_abs_diff_eq!(c.k5, 2.0 * 4f64.exp(), epsilon = 1e-9);
    assert_abs_diff_eq!(c.k5, 109.196, epsilon = 1e-3);
    assert_abs_diff_eq!(c.k4, 4.0 * 4f64.exp(), epsilon = 1e-9);
    let weib = SimConfig {
        baseline: Baseline::Weibull { shape: 2.0, scale: 1.5 },
        ..cfg
    };
    let c = constants_from_truth(&unit, 1.0, &weib).unwrap();
    assert_abs_diff_eq!(c.baseline_integral, (3.0f64 / 1.5).powi(2), epsilon = 1e-12);
}

#[test]
fn tail_bound_examples() {
    let b = tail_bound(1.0, 100, 1, 1.0, 1.0);
    assert_abs_diff_eq!(b.single, 2.0 * (-50.0f64 / 3.0).exp(), epsilon = 1e-20);
    assert_abs_diff_eq!(b.single, 1.16e-7, epsilon = 0.01e-7);
    assert_abs_diff_eq!(tail_bound(1e-12, 100, 1, 1.0, 1.0).single, 2.0, epsilon = 1e-9);
    assert_eq!(tail_bound(1e-12, 100, 10, 1.0, 1.0).union, 1.0);
}

#[test]
fn tail_bound_monotonicity() {
    let base = tail_bound(0.3, 200, 5, 1.0, 2.0).single;
    assert!(tail_bound(0.4, 200, 5, 1.0, 2.0).single < base);
    assert!(tail_bound(0.3, 400, 5, 1.0, 2.0).single < base);
    assert!(tail_bound(0.3, 200, 5, 1.5, 2.0).single > base);
    assert!(tail_bound(0.3, 200, 5, 1.0, 3.0).single > base);
}

#[test]
fn binomial_interval_edges() {
    let (lo, hi) = binomial_interval(0, 100, 0.95);
    assert_eq!(lo, 0.0);
    // Upper limit for zero successes is 1 - 0.025^(1/100).
    assert_abs_diff_eq!(hi, 1.0 - 0.025f64.powf(0.01), epsilon = 1e-9);
    let (lo, hi) = binomial_interval(50, 100, 0.95);
    assert!(lo < 0.5 && hi > 0.5);
    assert_abs_diff_eq!(lo + hi, 1.0, epsilon = 1e-9);
}

#[test]
fn mc_tail_extremes() {
    let cfg = sim(60, 3);
    assert_eq!(mc_score_tail(&cfg, 0.0, 100).unwrap().probability, 1.0);
    assert_eq!(mc_score_tail(&cfg, 1e6, 100).unwrap().probability, 0.0);
    assert!(mc_score_tail(&cfg, 0.1, 99).is_err());
}

#[test]
fn calibration_hits_level() {
    let cfg = sim(80, 4);
    let cal = calibrate_k2(&cfg, 0.5, 0.9, 100).unwrap();
    let gamma = crate::dantzig::gamma_schedule(80, 5, cal.k2, 0.5).unwrap();
    let norms = score_sup_norms(&cfg, 100, "calibration").unwrap();
    let covered = norms.iter().filter(|&&v| v <= gamma * (1.0 + 1e-12)).count();
    assert_eq!(covered, 90);
}

#[test]
fn theorem44_examples() {
    assert_eq!(theorem44_bound(1.0, 0.1, 0.5, 0.25), BoundValue::Vacuous);
    assert_eq!(theorem44_bound(0.0, 0.1, 1.0, 0.0), BoundValue::Finite(0.0));
    assert_abs_diff_eq!(theorem44_bound(1.0, 0.1, 1.0, 0.0).value().unwrap(), 0.1, epsilon = 1e-15);
}

#[test]
fn theorem45_examples() {
    let b = theorem45_bounds(1.0, 3, 0.1, 1.0, 1.0, 2.0, 0.0).unwrap();
    assert_abs_diff_eq!(b.l1.value().unwrap(), 1.2, epsilon = 1e-12);
    assert_abs_diff_eq!(b.lq.value().unwrap(), 2.0 * 3f64.sqrt() * 0.1, epsilon = 1e-12);
    let v = theorem45_bounds(1.0, 3, 0.1, 1.0, 1.0, 2.0, 0.1).unwrap();
    assert!(v.l1.is_vacuous());
    // kappa^2 = 1 > 2 S eps = 0.6, so the l_q display is still finite.
    let expect = (2.0 * 3f64.sqrt() * 0.1) * (2.0 * 3.0 * 0.1 / 0.4) + 2.0 * 3f64.sqrt() * 0.1;
    assert_abs_diff_eq!(v.lq.value().unwrap(), expect, epsilon = 1e-12);
    assert!(theorem45_bounds(1.0, 3, 0.1, 1.0, 1.0, 1.0, 0.0).is_err());
}

#[test]
fn bound_value_json_shape() {
    assert_eq!(serde_json::to_string(&BoundValue::Vacuous).unwrap(), "\"vacuous\"");
    assert_eq!(serde_json::to_string(&BoundValue::Finite(0.5)).unwrap(), "{\"finite\":0.5}");
}

fn tiny_experiment() -> ExperimentConfig {
    let json = r#"{
        "n_grid": [120],
        "p": 6,
        "S": 2,
        "beta0_values": [0.6, -0.6],
        "baseline": {"kind": "constant", "rate": 1.0},
        "censor_rate": 0.2,
        "covariate_law": {"kind": "uniform", "half_width": 0.9},
        "K1": 1.0,
        "tau": 3.0,
        "K2": 0.6,
        "alpha": 0.5,
        "reps": 1,
        "seed": 17,
        "population": {"n_big": 1000, "mc_reps": 1},
        "factor_options": {"restarts": 8, "oracle_samples": 2000}
    }"#;
    serde_json::from_str(json).unwrap()
}

#[test]
fn experiment_smoke_single_row() {
    let report = run_experiment(&tiny_experiment()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.summaries.len(), 1);
    assert!(report.failures.is_empty());
    let csv = report.rows_csv().unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("n,rep,seed,gamma,status"));
}

#[test]
fn experiment_zero_truth_gives_zero_estimate() {
    let mut cfg = tiny_experiment();
    cfg.beta0_values = vec![0.0, 0.0];
    cfg.reps = 3;
    cfg.k2 = Some(5.0);
    let report = run_experiment(&cfg).unwrap();
    for row in report.rows.iter().filter(|r| r.beta0_feasible) {
        assert_eq!(row.beta_hat_l1, 0.0);
    }
}

#[test]
fn experiment_requires_seed_and_valid_alpha() {
    let mut v: serde_json::Value = serde_json::to_value(tiny_experiment()).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    let mut cfg = tiny_experiment();
    cfg.alpha = 0.7;
    assert!(run_experiment(&cfg).is_err());
}

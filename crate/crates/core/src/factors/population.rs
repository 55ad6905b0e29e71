use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partial_likelihood::PartialLikelihood;
use crate::seed::replicate_seed;
use crate::survival_sim::{simulate_dataset, SimConfig};

/// Monte Carlo surrogate for the population information matrix
/// `I_n(beta_0)`: the average of `J_n(beta_0)` over independent large
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMatrix {
    pub matrix: DMatrix<f64>,
    pub n_used: usize,
    pub mc_reps: usize,
    /// Largest entrywise standard error of the average; `None` for a
    /// single replicate.
    pub stderr_sup: Option<f64>,
}

/// Replicate `r` is simulated from `sim_config` with
/// `seed = replicate_seed(sim_config.seed, r)` and `n = n_big`.
pub fn population_matrix(
    sim_config: &SimConfig,
    beta0: &DVector<f64>,
    n_big: usize,
    mc_reps: usize,
) -> Result<PopulationMatrix> {
    if n_big < 1000 {
        return Err(Error::InvalidConfig(format!("population matrix needs n_big >= 1000, got {n_big}")));
    }
    if mc_reps == 0 {
        return Err(Error::InvalidConfig("population matrix needs mc_reps >= 1".into()));
    }
    if beta0.len() != sim_config.p {
        return Err(Error::Dimension(format!(
            "beta0 has length {}, config has p = {}",
            beta0.len(),
            sim_config.p
        )));
    }
    let draws: Vec<DMatrix<f64>> = (0..mc_reps)
        .into_par_iter()
        .map(|r| {
            let config = sim_config
                .with_n(n_big)
                .with_seed(replicate_seed(sim_config.seed, r as u64));
            let data = simulate_dataset(&config)?;
            Ok(PartialLikelihood::new(&data).evaluate(beta0)?.hessian)
        })
        .collect::<Result<_>>()?;
    let p = sim_config.p;
    let reps = mc_reps as f64;
    let mean = draws.iter().fold(DMatrix::zeros(p, p), |acc, d| acc + d) / reps;
    let stderr_sup = (mc_reps > 1).then(|| {
        let var = draws.iter().fold(DMatrix::<f64>::zeros(p, p), |acc, d| {
            let diff = d - &mean;
            acc + diff.component_mul(&diff)
        }) / (reps - 1.0);
        var.iter().fold(0.0_f64, |m, v| m.max((v / reps).sqrt()))
    });
    Ok(PopulationMatrix {
        matrix: mean,
        n_used: n_big,
        mc_reps,
        stderr_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival_sim::{Baseline, CovariateLaw};

    fn config(law: CovariateLaw) -> SimConfig {
        SimConfig {
            n: 1000,
            p: 3,
            s: 1,
            beta0_values: vec![0.5],
            baseline: Baseline::Constant { rate: 1.0 },
            censor_rate: 0.2,
            covariate_law: law,
            k1: 1.01,
            tau: 4.0,
            seed: 21,
        }
    }

    #[test]
    fn single_replicate_equals_observed_information() {
        let cfg = config(CovariateLaw::Uniform { half_width: 1.0 });
        let beta0 = cfg.beta0();
        let pop = population_matrix(&cfg, &beta0, 1000, 1).unwrap();
        let data = simulate_dataset(&cfg.with_seed(replicate_seed(cfg.seed, 0))).unwrap();
        let j = PartialLikelihood::new(&data).evaluate(&beta0).unwrap().hessian;
        assert_eq!(pop.matrix, j);
        assert_eq!(pop.stderr_sup, None);
    }

    #[test]
    fn constant_covariates_give_zero_matrix() {
        let cfg = config(CovariateLaw::Uniform { half_width: 0.0 });
        let pop = population_matrix(&cfg, &cfg.beta0(), 1000, 2).unwrap();
        assert_eq!(pop.matrix.amax(), 0.0);
    }

    #[test]
    fn stderr_shrinks_with_more_replicates() {
        let cfg = config(CovariateLaw::Uniform { half_width: 1.0 });
        let beta0 = cfg.beta0();
        let few = population_matrix(&cfg.with_seed(1), &beta0, 1000, 8).unwrap();
        let many = population_matrix(&cfg.with_seed(2), &beta0, 1000, 32).unwrap();
        let ratio = few.stderr_sup.unwrap() / many.stderr_sup.unwrap();
        assert!(ratio > 1.0 && ratio < 4.0, "ratio = {ratio}");
    }

    #[test]
    fn small_n_rejected() {
        let cfg = config(CovariateLaw::Rademacher);
        assert!(population_matrix(&cfg, &cfg.beta0(), 999, 1).is_err());
        assert!(population_matrix(&cfg, &cfg.beta0(), 1000, 0).is_err());
    }
}

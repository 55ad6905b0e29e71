use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a single covariate entry; entries are i.i.d. across subjects
/// and coordinates.
pub trait CovariateSampler: Send + Sync {
    fn sample(&self, rng: &mut dyn rand::RngCore) -> f64;
    /// Supremum of `|Z|` under this law.
    fn bound(&self) -> f64;
}

struct UniformSampler {
    half_width: f64,
}

impl CovariateSampler for UniformSampler {
    fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        if self.half_width == 0.0 {
            0.0
        } else {
            rng.random_range(-self.half_width..self.half_width)
        }
    }

    fn bound(&self) -> f64 {
        self.half_width
    }
}

struct RademacherSampler;

impl CovariateSampler for RademacherSampler {
    fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    fn bound(&self) -> f64 {
        1.0
    }
}

struct ClippedGaussianSampler {
    sigma: f64,
    clip: f64,
}

impl CovariateSampler for ClippedGaussianSampler {
    fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.sigma * z).clamp(-self.clip, self.clip)
    }

    fn bound(&self) -> f64 {
        self.clip
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateLaw {
    /// Uniform on `[-half_width, half_width)`; `half_width = 0` gives an
    /// all-zero design.
    Uniform { half_width: f64 },
    Rademacher,
    /// `N(0, sigma^2)` clipped to `[-c, c]` with `c = min(clip, 0.99 K1)`.
    ClippedGaussian { sigma: f64, clip: f64 },
}

impl CovariateLaw {
    pub fn validate(&self, k1: f64) -> Result<()> {
        let bounded = |b: f64| {
            if b < k1 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "covariates must be bounded: sup |Z_ij| = {b} is not below K1 = {k1}"
                )))
            }
        };
        match *self {
            CovariateLaw::Uniform { half_width } => {
                if !(half_width >= 0.0 && half_width.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "uniform half_width must be finite and nonnegative, got {half_width}"
                    )));
                }
                bounded(half_width)
            }
            CovariateLaw::Rademacher => bounded(1.0),
            CovariateLaw::ClippedGaussian { sigma, clip } => {
                if !(sigma > 0.0 && sigma.is_finite() && clip > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "clipped gaussian needs sigma > 0 and clip > 0, got sigma = {sigma}, clip = {clip}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, k1: f64) -> Box<dyn CovariateSampler> {
        match *self {
            CovariateLaw::Uniform { half_width } => Box::new(UniformSampler { half_width }),
            CovariateLaw::Rademacher => Box::new(RademacherSampler),
            CovariateLaw::ClippedGaussian { sigma, clip } => Box::new(ClippedGaussianSampler {
                sigma,
                clip: clip.min(0.99 * k1),
            }),
        }
    }
}

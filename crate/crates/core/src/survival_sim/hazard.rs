use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Baseline hazard with closed-form cumulative hazard and inverse.
pub trait BaselineHazard: Send + Sync {
    fn name(&self) -> &'static str;
    fn hazard(&self, t: f64) -> f64;
    /// `Lambda(t) = int_0^t alpha(u) du`.
    fn cumulative(&self, t: f64) -> f64;
    fn inverse_cumulative(&self, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantHazard {
    pub rate: f64,
}

impl BaselineHazard for ConstantHazard {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn hazard(&self, _t: f64) -> f64 {
        self.rate
    }

    fn cumulative(&self, t: f64) -> f64 {
        self.rate * t
    }

    fn inverse_cumulative(&self, y: f64) -> f64 {
        y / self.rate
    }
}

/// `alpha(t) = (k / s) (t / s)^(k-1)`, `Lambda(t) = (t / s)^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullHazard {
    pub shape: f64,
    pub scale: f64,
}

impl BaselineHazard for WeibullHazard {
    fn name(&self) -> &'static str {
        "weibull"
    }

    fn hazard(&self, t: f64) -> f64 {
        (self.shape / self.scale) * (t / self.scale).powf(self.shape - 1.0)
    }

    fn cumulative(&self, t: f64) -> f64 {
        (t / self.scale).powf(self.shape)
    }

    fn inverse_cumulative(&self, y: f64) -> f64 {
        self.scale * y.powf(1.0 / self.shape)
    }
}

/// Serialisable choice of baseline hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Constant { rate: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl Baseline {
    /// Both families are integrable on bounded intervals iff their
    /// parameters are positive and finite.
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Baseline::Constant { rate } if !ok(rate) => Err(Error::InvalidConfig(format!(
                "baseline hazard must be integrable on [0, tau]: constant rate {rate} must be positive and finite"
            ))),
            Baseline::Weibull { shape, scale } if !(ok(shape) && ok(scale)) => {
                Err(Error::InvalidConfig(format!(
                    "baseline hazard must be integrable on [0, tau]: weibull shape {shape} and scale {scale} must be positive and finite"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Box<dyn BaselineHazard> {
        match *self {
            Baseline::Constant { rate } => Box::new(ConstantHazard { rate }),
            Baseline::Weibull { shape, scale } => Box::new(WeibullHazard { shape, scale }),
        }
    }
}

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{require_finite, require_positive, CharacteristicFunction, CumulantSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNormal")]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Deserialize)]
struct RawNormal {
    mu: f64,
    sigma: f64,
}

impl TryFrom<RawNormal> for NormalParams {
    type Error = Error;
    fn try_from(r: RawNormal) -> Result<Self> {
        NormalParams::new(r.mu, r.sigma)
    }
}

impl NormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        require_positive("sigma", sigma)?;
        Ok(NormalParams { mu, sigma })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-(x - self.mu) / (self.sigma * SQRT_2))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * (2.0 * PI).ln()
    }
}

impl CharacteristicFunction for NormalParams {
    /// `exp(-i mu t - sigma^2 t^2 / 2)`
    fn cf(&self, t: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * self.sigma * self.sigma * t * t).exp(), -self.mu * t)
    }

    fn cumulants(&self) -> CumulantSummary {
        CumulantSummary {
            mean: self.mu,
            variance: self.sigma * self.sigma,
            skewness: 0.0,
            kurtosis: 3.0,
        }
    }
}

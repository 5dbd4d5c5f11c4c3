use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{require_finite, require_positive, CharacteristicFunction, CumulantSummary};
use crate::error::{Error, Result};

/// Compound Poisson law with normal jumps: `sum_{i <= N} X_i`,
/// `N ~ Poisson(lambda)`, `X_i ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCpn")]
pub struct CpnParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
}

#[derive(Deserialize)]
struct RawCpn {
    mu: f64,
    sigma: f64,
    lambda: f64,
}

impl TryFrom<RawCpn> for CpnParams {
    type Error = Error;
    fn try_from(r: RawCpn) -> Result<Self> {
        CpnParams::new(r.mu, r.sigma, r.lambda)
    }
}

impl CpnParams {
    pub fn new(mu: f64, sigma: f64, lambda: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        require_positive("sigma", sigma)?;
        require_positive("lambda", lambda)?;
        Ok(CpnParams { mu, sigma, lambda })
    }

    /// Weight of the atom at zero (no jumps).
    pub fn atom_weight(&self) -> f64 {
        (-self.lambda).exp()
    }

    /// Density of the absolutely continuous part, summing Poisson-weighted
    /// normal densities from `N = 1`. The atom at 0 is not included.
    ///
    /// Summation stops once past the Poisson mode and a geometric bound on
    /// the remaining terms is below `tol`.
    pub fn pdf_series(&self, x: f64, tol: f64) -> f64 {
        assert!(tol > 0.0, "tolerance must be positive");
        let ln_lambda = self.lambda.ln();
        let mut sum = 0.0;
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            let ln_w = -self.lambda + nf * ln_lambda - ln_gamma(nf + 1.0);
            let var = nf * self.sigma * self.sigma;
            let d = x - nf * self.mu;
            sum += (ln_w - 0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt();

            if nf + 2.0 > self.lambda {
                // Terms beyond n are each bounded by w_{m} / sqrt(2 pi m sigma^2),
                // and the weights decay at least geometrically with ratio r.
                let r = self.lambda / (nf + 2.0);
                let next = (ln_w + ln_lambda - (nf + 1.0).ln()).exp()
                    / (2.0 * PI * (nf + 1.0) * self.sigma * self.sigma).sqrt();
                if next / (1.0 - r) < tol {
                    break;
                }
            }
            n += 1;
        }
        sum
    }
}

impl CharacteristicFunction for CpnParams {
    /// `exp(lambda (exp(-i mu t - sigma^2 t^2 / 2) - 1))`
    fn cf(&self, t: f64) -> Complex64 {
        let jump = Complex64::from_polar((-0.5 * self.sigma * self.sigma * t * t).exp(), -self.mu * t);
        (self.lambda * (jump - 1.0)).exp()
    }

    fn cumulants(&self) -> CumulantSummary {
        let (m, s2, l) = (self.mu, self.sigma * self.sigma, self.lambda);
        let q = m * m + s2;
        CumulantSummary {
            mean: l * m,
            variance: l * q,
            skewness: m * (m * m + 3.0 * s2) / (l.sqrt() * q.powf(1.5)),
            kurtosis: 3.0 + (m.powi(4) + 6.0 * s2 * m * m + 3.0 * s2 * s2) / (l * q * q),
        }
    }
}

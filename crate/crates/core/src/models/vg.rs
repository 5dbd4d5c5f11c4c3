//! Variance-Gamma law `Y = mu + drift * V + sigma * sqrt(V) * Z`,
//! `V ~ Gamma(shape = alpha, scale = theta)`, `Z ~ N(0, 1)`.
//!
//! Characteristic function and parameter derivatives
//! -------------------------------------------------
//!
//! With `B = 1 + theta sigma^2 t^2 / 2 + i drift theta t` the characteristic
//! function is `C = exp(Phi)`, `Phi = -i mu t - alpha log B` (principal log;
//! `Re B >= 1`, so no branch cut is ever crossed).
//!
//! First derivatives are `dC/dp = C Phi_p` with
//!
//! ```text
//! Phi_mu    = -i t
//! Phi_drift = -alpha B_drift / B      B_drift = i theta t
//! Phi_sigma = -alpha B_sigma / B      B_sigma = theta sigma t^2
//! Phi_alpha = -log B
//! Phi_theta = -alpha B_theta / B      B_theta = sigma^2 t^2 / 2 + i drift t
//! ```
//!
//! and second derivatives are `C (Phi_p Phi_q + Phi_pq)` where `Phi_pq`
//! vanishes whenever `mu` is involved, `Phi_alpha,alpha = 0`,
//! `Phi_alpha,q = -B_q / B`, and for `p, q` in `{drift, sigma, theta}`
//!
//! ```text
//! Phi_pq = -alpha (B_pq / B - B_p B_q / B^2)
//! B_drift,theta = i t    B_sigma,sigma = theta t^2    B_sigma,theta = sigma t^2
//! ```
//!
//! with every other `B_pq` zero.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{require_finite, require_positive, CharacteristicFunction, CumulantSummary};
use crate::error::{Error, Result};

pub const VG_DIM: usize = 5;

/// Index of a Variance-Gamma parameter in the `[mu, drift, sigma, alpha, theta]` vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VgParam {
    Mu = 0,
    Drift = 1,
    Sigma = 2,
    Alpha = 3,
    Theta = 4,
}

impl VgParam {
    pub const ALL: [VgParam; VG_DIM] = [
        VgParam::Mu,
        VgParam::Drift,
        VgParam::Sigma,
        VgParam::Alpha,
        VgParam::Theta,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VgParam::Mu => "mu",
            VgParam::Drift => "drift",
            VgParam::Sigma => "sigma",
            VgParam::Alpha => "alpha",
            VgParam::Theta => "theta",
        }
    }

    /// Scale parameters that must stay strictly positive.
    pub fn is_positive(self) -> bool {
        matches!(self, VgParam::Sigma | VgParam::Alpha | VgParam::Theta)
    }
}

impl std::str::FromStr for VgParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        VgParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown VG parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVg")]
pub struct VgParams {
    pub mu: f64,
    pub drift: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub theta: f64,
}

#[derive(Deserialize)]
struct RawVg {
    mu: f64,
    drift: f64,
    sigma: f64,
    alpha: f64,
    theta: f64,
}

impl TryFrom<RawVg> for VgParams {
    type Error = Error;
    fn try_from(r: RawVg) -> Result<Self> {
        VgParams::new(r.mu, r.drift, r.sigma, r.alpha, r.theta)
    }
}

impl VgParams {
    pub fn new(mu: f64, drift: f64, sigma: f64, alpha: f64, theta: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        require_finite("drift", drift)?;
        require_positive("sigma", sigma)?;
        require_positive("alpha", alpha)?;
        require_positive("theta", theta)?;
        Ok(VgParams {
            mu,
            drift,
            sigma,
            alpha,
            theta,
        })
    }

    pub fn to_array(&self) -> [f64; VG_DIM] {
        [self.mu, self.drift, self.sigma, self.alpha, self.theta]
    }

    pub fn from_array(v: [f64; VG_DIM]) -> Result<Self> {
        VgParams::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn get(&self, p: VgParam) -> f64 {
        self.to_array()[p.index()]
    }

    fn base(&self, t: f64) -> Complex64 {
        Complex64::new(
            1.0 + 0.5 * self.theta * self.sigma * self.sigma * t * t,
            self.drift * self.theta * t,
        )
    }

    /// `(B, log B, C)` at `t`.
    fn parts(&self, t: f64) -> (Complex64, Complex64, Complex64) {
        let b = self.base(t);
        let log_b = b.ln();
        let c = (Complex64::new(0.0, -self.mu * t) - self.alpha * log_b).exp();
        (b, log_b, c)
    }

    /// `Phi_p` and `B_p` (the latter zero for mu and alpha).
    fn phi_first(&self, t: f64, b: Complex64, log_b: Complex64) -> ([Complex64; VG_DIM], [Complex64; VG_DIM]) {
        let i = Complex64::i();
        let zero = Complex64::new(0.0, 0.0);
        let b_p = [
            zero,
            i * self.theta * t,
            Complex64::new(self.theta * self.sigma * t * t, 0.0),
            zero,
            Complex64::new(0.5 * self.sigma * self.sigma * t * t, self.drift * t),
        ];
        let inv_b = b.inv();
        let phi = [
            Complex64::new(0.0, -t),
            -self.alpha * b_p[1] * inv_b,
            -self.alpha * b_p[2] * inv_b,
            -log_b,
            -self.alpha * b_p[4] * inv_b,
        ];
        (phi, b_p)
    }

    /// Gradient of the characteristic function with respect to
    /// `[mu, drift, sigma, alpha, theta]`.
    pub fn cf_grad(&self, t: f64) -> [Complex64; VG_DIM] {
        let (b, log_b, c) = self.parts(t);
        let (phi, _) = self.phi_first(t, b, log_b);
        phi.map(|p| c * p)
    }

    /// Symmetric matrix of second partials of the characteristic function.
    pub fn cf_hess(&self, t: f64) -> [[Complex64; VG_DIM]; VG_DIM] {
        self.cf_all(t).2
    }

    /// Value, gradient and Hessian in one pass.
    #[allow(clippy::type_complexity)]
    pub fn cf_all(&self, t: f64) -> (Complex64, [Complex64; VG_DIM], [[Complex64; VG_DIM]; VG_DIM]) {
        let (b, log_b, c) = self.parts(t);
        let (phi, b_p) = self.phi_first(t, b, log_b);
        let inv_b = b.inv();
        let zero = Complex64::new(0.0, 0.0);

        // Second derivatives of B among {drift, sigma, theta}.
        let mut b_pq = [[zero; VG_DIM]; VG_DIM];
        let (d, s, th) = (1, 2, 4);
        b_pq[d][th] = Complex64::new(0.0, t);
        b_pq[th][d] = b_pq[d][th];
        b_pq[s][s] = Complex64::new(self.theta * t * t, 0.0);
        b_pq[s][th] = Complex64::new(self.sigma * t * t, 0.0);
        b_pq[th][s] = b_pq[s][th];

        let a = 3;
        let mut phi_pq = [[zero; VG_DIM]; VG_DIM];
        for p in [d, s, th] {
            for q in [d, s, th] {
                phi_pq[p][q] = -self.alpha * (b_pq[p][q] * inv_b - b_p[p] * b_p[q] * inv_b * inv_b);
            }
            phi_pq[a][p] = -b_p[p] * inv_b;
            phi_pq[p][a] = phi_pq[a][p];
        }

        let mut hess = [[zero; VG_DIM]; VG_DIM];
        for p in 0..VG_DIM {
            for q in p..VG_DIM {
                let v = c * (phi[p] * phi[q] + phi_pq[p][q]);
                hess[p][q] = v;
                hess[q][p] = v;
            }
        }
        (c, phi.map(|x| c * x), hess)
    }

    /// Draws from the law through its Gamma-mixture representation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.alpha, self.theta).expect("validated shape and scale");
        let v: f64 = gamma.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.drift * v + self.sigma * v.sqrt() * z
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl CharacteristicFunction for VgParams {
    /// `exp(-i mu t) / (1 + theta sigma^2 t^2 / 2 + i drift theta t)^alpha`
    fn cf(&self, t: f64) -> Complex64 {
        self.parts(t).2
    }

    fn cumulants(&self) -> CumulantSummary {
        let (d, s2, a, th) = (self.drift, self.sigma * self.sigma, self.alpha, self.theta);
        let u = d * d + s2 / th;
        CumulantSummary {
            mean: self.mu + a * th * d,
            variance: a * (d * d * th * th + th * s2),
            skewness: d * (2.0 * d * d + 3.0 * s2 / th) / (a.sqrt() * u.powf(1.5)),
            kurtosis: 3.0
                * (1.0 + (2.0 * d.powi(4) + s2 * s2 / (th * th) + 4.0 * s2 * d * d / th) / (a * u * u)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NormalParams;

    fn fig4() -> VgParams {
        VgParams::new(-2.0, 0.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cf_at_origin_and_substitution() {
        let p = VgParams::new(0.3, -0.4, 1.2, 0.7, 2.0).unwrap();
        assert_eq!(p.cf(0.0), Complex64::new(1.0, 0.0));
        let want = Complex64::from_polar(1.0, 2.0) / 1.5;
        assert!((fig4().cf(1.0) - want).norm() < 1e-15);
    }

    #[test]
    fn normal_limit() {
        let theta = 1e-6;
        let p = VgParams::new(0.2, -0.3, 1.1, 1.0 / theta, theta).unwrap();
        let n = NormalParams::new(0.2 - 0.3, 1.1).unwrap();
        let worst = (-50..=50)
            .map(|i| i as f64 * 0.1)
            .map(|x| (p.cf(x) - n.cf(x)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn derivatives_vanish_at_origin() {
        let p = VgParams::new(0.1, 0.5, 0.8, 1.3, 0.6).unwrap();
        for g in p.cf_grad(0.0) {
            assert_eq!(g.norm(), 0.0);
        }
        for row in p.cf_hess(0.0) {
            for h in row {
                assert_eq!(h.norm(), 0.0);
            }
        }
    }

    #[test]
    fn mu_derivatives_are_phase_factors() {
        let p = VgParams::new(0.1, 0.5, 0.8, 1.3, 0.6).unwrap();
        let t = 1.7;
        let it = Complex64::new(0.0, -t);
        assert!((p.cf_grad(t)[0] - it * p.cf(t)).norm() < 1e-15);
        assert!((p.cf_hess(t)[0][0] - it * it * p.cf(t)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_cumulants() {
        let c = VgParams::new(0.0, 0.0, 1.0, 1.0, 1.0).unwrap().cumulants();
        assert_eq!(c.skewness, 0.0);
        assert!((c.variance - 1.0).abs() < 1e-15);
        assert!((c.kurtosis - 6.0).abs() < 1e-15);
        let c = VgParams::new(1.0, 0.0, 0.7, 2.5, 0.3).unwrap().cumulants();
        assert!((c.kurtosis - 3.0 * (1.0 + 1.0 / 2.5)).abs() < 1e-14);
    }

    #[test]
    fn moments_fit_round_trip_values() {
        let c = VgParams::new(0.1841, -0.1399, 1.0, 0.8479, 1.0954).unwrap().cumulants();
        assert!((c.mean - 0.0541).abs() < 1e-4, "{}", c.mean);
        assert!((c.variance - 0.9487).abs() < 1e-3, "{}", c.variance);
        assert!((c.skewness + 0.4689).abs() < 1e-3, "{}", c.skewness);
        assert!((c.kurtosis - 6.6853).abs() < 1e-3, "{}", c.kurtosis);
    }

    #[test]
    fn param_names_parse() {
        assert_eq!("drift".parse::<VgParam>().unwrap(), VgParam::Drift);
        assert!("delta".parse::<VgParam>().is_err());
    }
}

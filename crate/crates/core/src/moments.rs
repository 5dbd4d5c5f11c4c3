//! Sample moments and method-of-moments Variance-Gamma estimates under the
//! identification `sigma = 1`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CharacteristicFunction, CumulantSummary, VgParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMoments")]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    /// Second central moment with divisor `n`, consistent with skewness and
    /// kurtosis below and with the normal maximum-likelihood variance.
    pub variance: f64,
    /// Same with divisor `n - 1`.
    pub variance_unbiased: f64,
    pub skewness: f64,
    /// Pearson kurtosis `m4 / m2^2`.
    pub kurtosis: f64,
}

#[derive(Deserialize)]
struct RawMoments {
    n: usize,
    mean: f64,
    variance: f64,
    skewness: f64,
    kurtosis: f64,
}

impl TryFrom<RawMoments> for SampleMoments {
    type Error = Error;
    fn try_from(r: RawMoments) -> Result<Self> {
        SampleMoments::from_summary(r.n, r.mean, r.variance, r.skewness, r.kurtosis)
    }
}

impl SampleMoments {
    /// Builds a summary from published statistics (variance with divisor `n`).
    pub fn from_summary(n: usize, mean: f64, variance: f64, skewness: f64, kurtosis: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::SampleTooSmall { required: 4, actual: n });
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::ZeroVariance);
        }
        if !(mean.is_finite() && skewness.is_finite() && kurtosis.is_finite()) {
            return Err(Error::InvalidParameter("moments must be finite".into()));
        }
        if kurtosis < 1.0 + skewness * skewness - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "kurtosis {kurtosis} is below 1 + skewness^2"
            )));
        }
        Ok(SampleMoments {
            n,
            mean,
            variance,
            variance_unbiased: variance * n as f64 / (n as f64 - 1.0),
            skewness,
            kurtosis,
        })
    }

    pub fn as_cumulants(&self) -> CumulantSummary {
        CumulantSummary {
            mean: self.mean,
            variance: self.variance,
            skewness: self.skewness,
            kurtosis: self.kurtosis,
        }
    }
}

pub fn sample_moments(xs: &[f64]) -> Result<SampleMoments> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::SampleTooSmall { required: 4, actual: n });
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(SampleMoments {
        n,
        mean,
        variance: m2,
        variance_unbiased: m2 * nf / (nf - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Symmetric fit (`drift = 0`, `sigma = 1`) in closed form:
/// `alpha = 3 / (kurt - 3)`, `theta = var / alpha`, `mu = mean`.
pub fn fit_moments_svg(m: &SampleMoments) -> Result<VgParams> {
    if m.kurtosis <= 3.0 {
        return Err(Error::NoExcessKurtosis(m.kurtosis));
    }
    let alpha = 3.0 / (m.kurtosis - 3.0);
    VgParams::new(m.mean, 0.0, 1.0, alpha, m.variance / alpha)
}

const AVG_MAX_ITER: usize = 200;
const AVG_TOL: f64 = 1e-12;
const AVG_ACCEPT: f64 = 1e-10;

/// Asymmetric fit with `sigma = 1`: damped Newton on the four cumulant
/// equations in `(mu, drift, alpha, theta)`, started from the symmetric
/// solution with the drift seeded from the sign of the sample skewness.
pub fn fit_moments_avg(m: &SampleMoments) -> Result<VgParams> {
    let svg = fit_moments_svg(m)?;
    let target = m.as_cumulants();
    let seed = if m.skewness == 0.0 { 0.0 } else { 0.1 * m.skewness.signum() };
    let mut p = Vector4::new(svg.mu, seed, svg.alpha, svg.theta);
    // Keep the mean equation satisfied from the start.
    p[0] = m.mean - p[2] * p[3] * p[1];

    let mut r = residual(&p, &target);
    for _ in 0..AVG_MAX_ITER {
        let norm = r.amax();
        if norm <= AVG_TOL {
            break;
        }
        let step = match moment_jacobian(&p).lu().solve(&(-r)) {
            Some(s) => s,
            None => break,
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = p + step * lambda;
            if cand[2] > 0.0 && cand[3] > 0.0 {
                let rc = residual(&cand, &target);
                if rc.amax() < norm {
                    p = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let res = r.amax();
    if !(res <= AVG_ACCEPT) {
        return Err(Error::MomentSystem {
            iterations: AVG_MAX_ITER,
            residual: res,
        });
    }
    VgParams::new(p[0], p[1], 1.0, p[2], p[3])
}

fn params(p: &Vector4<f64>) -> VgParams {
    VgParams {
        mu: p[0],
        drift: p[1],
        sigma: 1.0,
        alpha: p[2],
        theta: p[3],
    }
}

fn residual(p: &Vector4<f64>, target: &CumulantSummary) -> Vector4<f64> {
    let c = params(p).cumulants();
    Vector4::new(
        c.mean - target.mean,
        c.variance - target.variance,
        c.skewness - target.skewness,
        c.kurtosis - target.kurtosis,
    )
}

/// Jacobian of `(mean, variance, skewness, kurtosis)` with respect to
/// `(mu, drift, alpha, theta)` at `sigma = 1`.
pub(crate) fn moment_jacobian(p: &Vector4<f64>) -> Matrix4<f64> {
    let (d, a, th) = (p[1], p[2], p[3]);
    let s2 = 1.0;
    let u = d * d + s2 / th;
    let u_d = 2.0 * d;
    let u_th = -s2 / (th * th);

    let num = 2.0 * d.powi(3) + 3.0 * d * s2 / th;
    let num_d = 6.0 * d * d + 3.0 * s2 / th;
    let num_th = -3.0 * d * s2 / (th * th);
    let skew = num / (a.sqrt() * u.powf(1.5));
    let skew_d = (num_d * u.powf(-1.5) - 1.5 * num * u.powf(-2.5) * u_d) / a.sqrt();
    let skew_th = (num_th * u.powf(-1.5) - 1.5 * num * u.powf(-2.5) * u_th) / a.sqrt();
    let skew_a = -0.5 * skew / a;

    let k = 2.0 * d.powi(4) + s2 * s2 / (th * th) + 4.0 * s2 * d * d / th;
    let k_d = 8.0 * d.powi(3) + 8.0 * s2 * d / th;
    let k_th = -2.0 * s2 * s2 / th.powi(3) - 4.0 * s2 * d * d / (th * th);
    let kurt_d = 3.0 / a * (k_d / (u * u) - 2.0 * k * u_d / u.powi(3));
    let kurt_th = 3.0 / a * (k_th / (u * u) - 2.0 * k * u_th / u.powi(3));
    let kurt_a = -3.0 * k / (a * a * u * u);

    Matrix4::new(
        1.0, a * th, th * d, a * d,
        0.0, 2.0 * a * d * th * th, d * d * th * th + th * s2, a * (2.0 * d * d * th + s2),
        0.0, skew_d, skew_a, skew_th,
        0.0, kurt_d, kurt_a, kurt_th,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn table1() -> SampleMoments {
        SampleMoments::from_summary(2755, 0.0541, 0.9487, -0.4687, 6.6853).unwrap()
    }

    #[test]
    fn two_point_sample() {
        let m = sample_moments(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.mean, 0.5);
        assert_eq!(m.skewness, 0.0);
        assert!((m.kurtosis - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(sample_moments(&[1.0; 3]), Err(Error::SampleTooSmall { .. })));
        assert!(matches!(sample_moments(&[2.0; 10]), Err(Error::ZeroVariance)));
        assert!(matches!(
            sample_moments(&[1.0, f64::NAN, 0.0, 2.0]),
            Err(Error::NonFiniteSample(1))
        ));
        let flat = SampleMoments::from_summary(100, 0.0, 1.0, 0.0, 2.5).unwrap();
        assert!(matches!(fit_moments_svg(&flat), Err(Error::NoExcessKurtosis(_))));
        assert!(matches!(fit_moments_avg(&flat), Err(Error::NoExcessKurtosis(_))));
    }

    #[test]
    fn normal_sample_kurtosis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = sample_moments(&xs).unwrap();
        assert!((m.kurtosis - 3.0).abs() < 0.02, "{}", m.kurtosis);
    }

    #[test]
    fn svg_closed_form() {
        let p = fit_moments_svg(&table1()).unwrap();
        assert!((p.mu - 0.0541).abs() < 5e-4);
        assert!((p.alpha - 0.8140).abs() < 5e-4);
        assert!((p.theta - 1.1654).abs() < 5e-4);

        let unit = SampleMoments::from_summary(100, 0.0, 1.0, 0.0, 6.0).unwrap();
        let p = fit_moments_svg(&unit).unwrap();
        assert!((p.alpha - 1.0).abs() < 1e-15 && (p.theta - 1.0).abs() < 1e-15);

        let c = fit_moments_svg(&table1()).unwrap().cumulants();
        assert!((c.mean - 0.0541).abs() < 1e-10);
        assert!((c.variance - 0.9487).abs() < 1e-10);
        assert!((c.kurtosis - 6.6853).abs() < 1e-10);
    }

    #[test]
    fn avg_matches_published_estimates() {
        let p = fit_moments_avg(&table1()).unwrap();
        assert!((p.mu - 0.1841).abs() < 5e-4, "{p:?}");
        assert!((p.drift + 0.1399).abs() < 5e-4, "{p:?}");
        assert!((p.alpha - 0.8479).abs() < 5e-4, "{p:?}");
        assert!((p.theta - 1.0954).abs() < 5e-4, "{p:?}");
        let c = p.cumulants();
        let t = table1();
        assert!((c.mean - t.mean).abs() < 1e-9);
        assert!((c.variance - t.variance).abs() < 1e-9);
        assert!((c.skewness - t.skewness).abs() < 1e-9);
        assert!((c.kurtosis - t.kurtosis).abs() < 1e-9);
    }

    #[test]
    fn avg_with_zero_skew_is_svg() {
        let m = SampleMoments::from_summary(500, 0.1, 1.3, 0.0, 5.0).unwrap();
        let a = fit_moments_avg(&m).unwrap();
        let s = fit_moments_svg(&m).unwrap();
        assert_eq!(a.drift, 0.0);
        for (x, y) in a.to_array().iter().zip(s.to_array()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = Vector4::new(0.2, -0.3, 0.9, 1.2);
        let target = CumulantSummary {
            mean: 0.0,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        };
        let j = moment_jacobian(&p);
        let h = 1e-6;
        for c in 0..4 {
            let mut up = p;
            let mut dn = p;
            up[c] += h;
            dn[c] -= h;
            let fd = (residual(&up, &target) - residual(&dn, &target)) / (2.0 * h);
            for r in 0..4 {
                let scale = j[(r, c)].abs().max(1.0);
                assert!((fd[r] - j[(r, c)]).abs() / scale < 1e-7, "({r},{c}) {} vs {}", fd[r], j[(r, c)]);
            }
        }
    }

    #[test]
    fn json_input_is_validated() {
        let s = r#"{"n":2755,"mean":0.0541,"variance":0.9487,"skewness":-0.4687,"kurtosis":6.6853}"#;
        let m: SampleMoments = serde_json::from_str(s).unwrap();
        assert_eq!(m.n, 2755);
        let bad = r#"{"n":2,"mean":0,"variance":1,"skewness":0,"kurtosis":3}"#;
        assert!(serde_json::from_str::<SampleMoments>(bad).is_err());
    }
}

//! Fractional Fourier transform and characteristic-function inversion.
//!
//! `G_k(x, delta) = sum_{j<n} x_j exp(-2 pi i j k delta)` is evaluated with
//! three FFTs of length `2n` through the identity
//! `jk = (j^2 + k^2 - (k - j)^2) / 2`:
//!
//! ```text
//! G_k = exp(-i pi k^2 delta) * IDFT[ DFT(y) * DFT(z) ]_k
//! y_j = x_j exp(-i pi j^2 delta)                      (j < n),  0 otherwise
//! z_j = exp(+i pi j^2 delta)                          (j < n)
//! z_j = exp(+i pi (j - 2n)^2 delta)                   (n <= j < 2n)
//! ```
//!
//! `z` carries the opposite exponent sign from `y`; with equal signs the
//! circular convolution does not reproduce the direct sum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{dft_in_place, Direction};
use crate::grid::GridSpec;
use crate::table::{DensityTable, InversionDiagnostics, TableKind};

/// `|cf(+-a/2)|` above this triggers a truncation warning.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

/// Precomputed chirp factors and the transformed `z` sequence for one
/// `(n, delta)` pair. Reusable across many inputs.
#[derive(Debug, Clone)]
pub struct FrftPlan {
    n: usize,
    delta: f64,
    chirp: Vec<Complex64>,
    z_hat: Vec<Complex64>,
}

impl FrftPlan {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let m = 2 * n;
        // exp(-i pi j^2 delta) for j < n; j*j is exact in f64 for any usable n.
        let chirp: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, -PI * ((j * j) as f64) * delta))
            .collect();
        let mut z_hat = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..n {
            z_hat[j] = chirp[j].conj();
        }
        for j in n..m {
            let d = (m - j) as f64;
            z_hat[j] = Complex64::from_polar(1.0, PI * d * d * delta);
        }
        dft_in_place(&mut z_hat, Direction::Forward)?;
        Ok(FrftPlan {
            n,
            delta,
            chirp,
            z_hat,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let m = 2 * self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for ((yj, &xj), &c) in y.iter_mut().zip(x).zip(&self.chirp) {
            *yj = xj * c;
        }
        dft_in_place(&mut y, Direction::Forward)?;
        for (yj, zj) in y.iter_mut().zip(&self.z_hat) {
            *yj *= zj;
        }
        dft_in_place(&mut y, Direction::Inverse)?;
        y.truncate(self.n);
        for (yk, &c) in y.iter_mut().zip(&self.chirp) {
            *yk *= c;
        }
        Ok(y)
    }
}

/// `G_k(x, delta)` for `0 <= k < n`, with `n = x.len()` a power of two.
pub fn frft(x: &[Complex64], delta: f64) -> Result<Vec<Complex64>> {
    FrftPlan::new(x.len(), delta)?.apply(x)
}

/// Inversion of Fourier-side samples on a fixed grid:
///
/// `f(x_k) = (beta / 2 pi) exp(-i pi (k - n/2) n delta) G_k(F_j exp(-i pi j n delta), -delta)`
#[derive(Debug, Clone)]
pub struct Inverter {
    grid: GridSpec,
    plan: FrftPlan,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl Inverter {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let n = grid.n;
        let nd = n as f64 * grid.delta;
        let plan = FrftPlan::new(n, -grid.delta)?;
        let pre = (0..n)
            .map(|j| Complex64::from_polar(1.0, -PI * j as f64 * nd))
            .collect();
        let scale = grid.beta / (2.0 * PI);
        let post = (0..n)
            .map(|k| {
                let centered = k as f64 - (n / 2) as f64;
                Complex64::from_polar(scale, -PI * centered * nd)
            })
            .collect();
        Ok(Inverter {
            grid,
            plan,
            pre,
            post,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Complex inversion output (before the real part is taken).
    pub fn invert_complex(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        if samples.len() != self.grid.n {
            return Err(Error::LengthMismatch {
                expected: self.grid.n,
                actual: samples.len(),
            });
        }
        let input: Vec<Complex64> = samples.iter().zip(&self.pre).map(|(s, p)| s * p).collect();
        let mut out = self.plan.apply(&input)?;
        for (o, p) in out.iter_mut().zip(&self.post) {
            *o *= p;
        }
        Ok(out)
    }

    /// Real table from samples `F(t_j)`. `edge_modulus` feeds the truncation check.
    pub fn invert(
        &self,
        samples: &[Complex64],
        kind: TableKind,
        edge_modulus: f64,
    ) -> Result<DensityTable> {
        let out = self.invert_complex(samples)?;
        let max_imag = out.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let values = out.iter().map(|v| v.re).collect();
        Ok(DensityTable {
            grid: self.grid,
            kind,
            values,
            diagnostics: InversionDiagnostics {
                max_imag_residual: max_imag,
                edge_cf_modulus: edge_modulus,
                truncation_warning: edge_modulus > TRUNCATION_THRESHOLD,
                ..Default::default()
            },
        })
    }
}

/// Samples `cf` on the input lattice, rejecting non-finite values.
pub fn sample_cf<F>(cf: F, grid: &GridSpec) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    (0..grid.n)
        .map(|j| {
            let t = grid.t(j);
            let v = cf(t);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteCf { index: j, t })
            }
        })
        .collect()
}

/// `max(|cf(-a/2)|, |cf(a/2)|)`.
pub fn edge_modulus<F>(cf: F, grid: &GridSpec) -> f64
where
    F: Fn(f64) -> Complex64,
{
    let h = grid.a / 2.0;
    cf(-h).norm().max(cf(h).norm())
}

/// Density table recovered from a characteristic function `E[exp(-i t Y)]`.
pub fn invert_cf<F>(cf: F, grid: &GridSpec) -> Result<DensityTable>
where
    F: Fn(f64) -> Complex64,
{
    let samples = sample_cf(&cf, grid)?;
    let edge = edge_modulus(&cf, grid);
    let table = Inverter::new(*grid)?.invert(&samples, TableKind::Density, edge)?;
    if table.diagnostics.truncation_warning {
        log::warn!(
            "|cf(+-a/2)| = {:e} exceeds {:e}; density may carry truncation ripple",
            edge,
            TRUNCATION_THRESHOLD
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::dft;

    fn direct(x: &[Complex64], delta: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 * delta))
                    .sum()
            })
            .collect()
    }

    fn seq(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| Complex64::new((0.37 * j as f64).sin() + 0.1, (1.1 * j as f64).cos()))
            .collect()
    }

    #[test]
    fn zero_delta_sums() {
        let x = seq(16);
        let total: Complex64 = x.iter().sum();
        for v in frft(&x, 0.0).unwrap() {
            assert!((v - total).norm() < 1e-12);
        }
    }

    #[test]
    fn reciprocal_n_is_dft() {
        let x = seq(64);
        let a = frft(&x, 1.0 / 64.0).unwrap();
        let b = dft(&x, Direction::Forward).unwrap();
        let err = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn small_delta_matches_direct() {
        let x = seq(8);
        let a = frft(&x, 0.013).unwrap();
        for (p, q) in a.iter().zip(direct(&x, 0.013)) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn plan_rejects_wrong_length() {
        let plan = FrftPlan::new(8, 0.1).unwrap();
        assert!(matches!(
            plan.apply(&seq(4)),
            Err(Error::LengthMismatch { expected: 8, actual: 4 })
        ));
        assert!(frft(&seq(6), 0.1).is_err());
    }

    #[test]
    fn non_finite_cf_is_reported() {
        let grid = GridSpec::new(8.0, 64).unwrap();
        let err = invert_cf(
            |t| {
                if t == 1.0 {
                    Complex64::new(f64::NAN, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            },
            &grid,
        )
        .unwrap_err();
        match err {
            Error::NonFiniteCf { index, t } => {
                assert_eq!(t, 1.0);
                assert_eq!(index, 40);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn flat_cf_is_a_spike_of_unit_mass() {
        // cf == 1 is the point mass at 0; the inversion is a narrow spike.
        let grid = GridSpec::new(20.0, 256).unwrap();
        let table = invert_cf(|_| Complex64::new(1.0, 0.0), &grid).unwrap();
        let k0 = grid.zero_index();
        let peak = table.values[k0];
        assert!(table.values.iter().all(|v| v.abs() <= peak + 1e-12));
        assert!((table.values.iter().sum::<f64>() * grid.gamma - 1.0).abs() < 1e-2);
        assert!(table.diagnostics.truncation_warning);
    }
}

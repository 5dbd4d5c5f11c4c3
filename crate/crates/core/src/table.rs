//! Tables of real values on the output lattice and their interpolation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Density,
    Cdf,
    Derivative,
}

/// Numerical health of one inversion. Not serialized with the table.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InversionDiagnostics {
    pub max_imag_residual: f64,
    pub edge_cf_modulus: f64,
    pub truncation_warning: bool,
    /// Largest decrease between consecutive raw CDF values before the
    /// isotonic pass. Zero for other kinds.
    pub max_monotonicity_violation: f64,
    /// Values outside `[0, 1]` that the CDF clamp touched.
    pub clamped_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub grid: GridSpec,
    pub kind: TableKind,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub diagnostics: InversionDiagnostics,
}

impl DensityTable {
    pub fn lattice(&self) -> Vec<f64> {
        self.grid.output_lattice()
    }

    /// Trapezoidal integral over the whole lattice.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.gamma)
    }

    /// Running trapezoidal integral, starting at 0 on `x_0`.
    pub fn cumulative(&self) -> Vec<f64> {
        let h = self.grid.gamma;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    pub fn interpolator(&self) -> Interpolator {
        let shape = match self.kind {
            TableKind::Derivative => Shape::Free,
            TableKind::Density | TableKind::Cdf => Shape::Monotone,
        };
        Interpolator::new(self.grid.x_min(), self.grid.gamma, &self.values, shape)
    }

    /// Interpolated value at `x`; errors outside `[x_0, x_{n-1}]`.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        self.interpolator().eval(x)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            wtr.serialize((self.grid.x(k), v))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Hyman-filtered slopes: no overshoot on locally monotone data.
    Monotone,
    /// Unfiltered slopes; the interpolant is linear in the table values.
    Free,
}

/// How the slope at one node is formed from the table values. Every rule is
/// linear in the values, so a rule set chosen on one table can be replayed on
/// another (e.g. a density and its parameter derivatives).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeRule {
    /// Finite-difference stencil: fourth order in the interior, second order
    /// next to and at the edges.
    Stencil,
    /// Zero slope.
    Zero,
    /// `3 * (f[j + 1] - f[j]) / h`, the Hyman bound from the secant on `[j, j+1]`.
    Secant(usize),
}

/// Cubic Hermite interpolant on a uniform lattice.
///
/// With [`Shape::Monotone`] the node slopes are limited by Hyman's filter
/// wherever the data are locally monotone, which keeps the interpolant
/// monotone there while leaving local extrema untouched.
#[derive(Debug, Clone)]
pub struct Interpolator {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    rules: Vec<SlopeRule>,
}

/// Location of a point in the lattice plus Hermite basis weights.
#[derive(Debug, Clone, Copy)]
pub struct Basis {
    k: usize,
    w: [f64; 4],
    exact: bool,
}

impl Interpolator {
    pub fn new(x0: f64, h: f64, values: &[f64], shape: Shape) -> Self {
        let rules = match shape {
            Shape::Monotone => hyman_rules(values, h),
            Shape::Free => vec![SlopeRule::Stencil; values.len()],
        };
        Self::with_rules(x0, h, values, rules)
    }

    /// Interpolant of `values` using slope rules chosen elsewhere.
    pub fn with_rules(x0: f64, h: f64, values: &[f64], rules: Vec<SlopeRule>) -> Self {
        assert_eq!(values.len(), rules.len(), "one slope rule per node");
        assert!(values.len() >= 2, "need at least two nodes");
        let slopes = (0..values.len()).map(|k| apply_rule(values, h, k, rules[k])).collect();
        Interpolator {
            x0,
            h,
            values: values.to_vec(),
            slopes,
            rules,
        }
    }

    pub fn rules(&self) -> &[SlopeRule] {
        &self.rules
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.values.len() - 1) as f64 * self.h
    }

    pub fn basis(&self, x: f64) -> Result<Basis> {
        let n = self.values.len();
        let pos = (x - self.x0) / self.h;
        let last = (n - 1) as f64;
        if !(pos >= -1e-9 && pos <= last + 1e-9) {
            return Err(Error::OutOfRange {
                x,
                lo: self.x_min(),
                hi: self.x_max(),
            });
        }
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return Ok(Basis {
                k: nearest as usize,
                w: [1.0, 0.0, 0.0, 0.0],
                exact: true,
            });
        }
        let k = (pos.floor() as usize).min(n - 2);
        let u = pos - k as f64;
        let u2 = u * u;
        let u3 = u2 * u;
        let h = self.h;
        Ok(Basis {
            k,
            w: [
                2.0 * u3 - 3.0 * u2 + 1.0,
                (u3 - 2.0 * u2 + u) * h,
                -2.0 * u3 + 3.0 * u2,
                (u3 - u2) * h,
            ],
            exact: false,
        })
    }

    pub fn eval_basis(&self, b: &Basis) -> f64 {
        if b.exact {
            return self.values[b.k];
        }
        let k = b.k;
        b.w[0] * self.values[k]
            + b.w[1] * self.slopes[k]
            + b.w[2] * self.values[k + 1]
            + b.w[3] * self.slopes[k + 1]
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_basis(&self.basis(x)?))
    }
}

fn stencil_slope(f: &[f64], h: f64, k: usize) -> f64 {
    let n = f.len();
    if n == 2 {
        return (f[1] - f[0]) / h;
    }
    if k == 0 {
        (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
    } else if k >= 2 && k + 2 < n {
        (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h)
    } else {
        (f[k + 1] - f[k - 1]) / (2.0 * h)
    }
}

fn apply_rule(f: &[f64], h: f64, k: usize, rule: SlopeRule) -> f64 {
    match rule {
        SlopeRule::Stencil => stencil_slope(f, h, k),
        SlopeRule::Zero => 0.0,
        SlopeRule::Secant(j) => 3.0 * (f[j + 1] - f[j]) / h,
    }
}

fn hyman_rules(f: &[f64], h: f64) -> Vec<SlopeRule> {
    let n = f.len();
    let secant = |j: usize| f[j + 1] - f[j];
    // Limit a stencil slope `m` against secants `js` that share its sign.
    let limit = |m: f64, js: &[usize]| -> SlopeRule {
        let s = secant(js[0]).signum();
        if s * m <= 0.0 {
            return SlopeRule::Zero;
        }
        let tightest = js
            .iter()
            .copied()
            .min_by(|&a, &b| secant(a).abs().total_cmp(&secant(b).abs()))
            .expect("non-empty");
        if m.abs() * h > 3.0 * secant(tightest).abs() {
            SlopeRule::Secant(tightest)
        } else {
            SlopeRule::Stencil
        }
    };
    (0..n)
        .map(|k| {
            let m = stencil_slope(f, h, k);
            if n == 2 {
                return SlopeRule::Stencil;
            }
            if k == 0 || k == n - 1 {
                let j = if k == 0 { 0 } else { n - 2 };
                return if secant(j) == 0.0 { SlopeRule::Zero } else { limit(m, &[j]) };
            }
            let (dl, dr) = (secant(k - 1), secant(k));
            if dl == 0.0 || dr == 0.0 {
                SlopeRule::Zero
            } else if dl * dr > 0.0 {
                limit(m, &[k - 1, k])
            } else {
                SlopeRule::Stencil
            }
        })
        .collect()
}

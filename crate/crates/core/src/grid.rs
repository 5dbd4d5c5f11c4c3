use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_A: f64 = 20.0;
pub const DEFAULT_N: usize = 2048;

/// Discretization shared by the Fourier-side input lattice
/// `t_j = (j - n/2) * beta` and the output lattice `x_k = (k - n/2) * gamma`.
///
/// `beta = a / n` and `delta = beta * gamma / (2 pi)` are derived, never set
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    pub a: f64,
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    a: f64,
    n: usize,
    gamma: Option<f64>,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        match raw.gamma {
            Some(g) => GridSpec::with_gamma(raw.a, raw.n, g),
            None => GridSpec::new(raw.a, raw.n),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(DEFAULT_A, DEFAULT_N).expect("default grid is valid")
    }
}

impl GridSpec {
    /// Symmetric grid with `beta = gamma = a / n`.
    pub fn new(a: f64, n: usize) -> Result<Self> {
        Self::with_gamma(a, n, a / n as f64)
    }

    pub fn with_gamma(a: f64, n: usize, gamma: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 2"
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidGrid(format!("a = {a} must be positive")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidGrid(format!("gamma = {gamma} must be positive")));
        }
        let beta = a / n as f64;
        Ok(GridSpec {
            a,
            n,
            beta,
            gamma,
            delta: beta * gamma / (2.0 * PI),
        })
    }

    /// Index of the zero-frequency point `t_{n/2} = 0`.
    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    pub fn t(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.beta
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.gamma
    }

    pub fn input_lattice(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.t(j)).collect()
    }

    pub fn output_lattice(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Index of the lattice point nearest to `x`, clamped to the lattice.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = (x / self.gamma).round() + (self.n / 2) as f64;
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = GridSpec::default();
        assert_eq!(g.n, 2048);
        assert_eq!(g.beta, 20.0 / 2048.0);
        assert_eq!(g.gamma, g.beta);
        assert_eq!(g.delta, g.beta * g.gamma / (2.0 * PI));
        assert_eq!(g.t(g.zero_index()), 0.0);
        assert_eq!(g.x(0), -10.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(20.0, 1000).is_err());
        assert!(GridSpec::new(20.0, 1).is_err());
        assert!(GridSpec::new(-1.0, 64).is_err());
        assert!(GridSpec::with_gamma(20.0, 64, 0.0).is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let g = GridSpec::with_gamma(16.0, 512, 0.05).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GridSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert!(serde_json::from_str::<GridSpec>(r#"{"a":20,"n":100}"#).is_err());
    }
}

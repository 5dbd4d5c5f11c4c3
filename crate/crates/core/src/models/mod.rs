//! Infinitely divisible families described by their characteristic functions
//! `E[exp(-i t Y)]`.

mod cpn;
mod normal;
mod vg;

pub use cpn::CpnParams;
pub use normal::NormalParams;
pub use vg::{VgParams, VgParam, VG_DIM};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Pearson kurtosis; 3 for the normal law.
    pub kurtosis: f64,
}

impl CumulantSummary {
    /// First four raw moments `E[Y^m]`, `m = 1..4`.
    pub fn raw_moments(&self) -> [f64; 4] {
        let k1 = self.mean;
        let k2 = self.variance;
        let k3 = self.skewness * k2.powf(1.5);
        let k4 = (self.kurtosis - 3.0) * k2 * k2;
        [
            k1,
            k2 + k1 * k1,
            k3 + 3.0 * k2 * k1 + k1.powi(3),
            k4 + 4.0 * k3 * k1 + 3.0 * k2 * k2 + 6.0 * k2 * k1 * k1 + k1.powi(4),
        ]
    }
}

/// A law known through its characteristic function.
pub trait CharacteristicFunction {
    fn cf(&self, t: f64) -> Complex64;
    fn cumulants(&self) -> CumulantSummary;

    fn mean(&self) -> f64 {
        self.cumulants().mean
    }
}

/// Parameter record with a family tag, serialized as
/// `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Model {
    Normal(NormalParams),
    Vg(VgParams),
    Cpn(CpnParams),
}

impl Model {
    pub fn family(&self) -> &'static str {
        match self {
            Model::Normal(_) => "normal",
            Model::Vg(_) => "vg",
            Model::Cpn(_) => "cpn",
        }
    }
}

impl CharacteristicFunction for Model {
    fn cf(&self, t: f64) -> Complex64 {
        match self {
            Model::Normal(p) => p.cf(t),
            Model::Vg(p) => p.cf(t),
            Model::Cpn(p) => p.cf(t),
        }
    }

    fn cumulants(&self) -> CumulantSummary {
        match self {
            Model::Normal(p) => p.cumulants(),
            Model::Vg(p) => p.cumulants(),
            Model::Cpn(p) => p.cumulants(),
        }
    }
}

pub(crate) fn require_positive(name: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

pub(crate) fn require_finite(name: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

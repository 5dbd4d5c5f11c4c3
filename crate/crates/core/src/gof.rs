//! Distribution function by Fourier inversion, Kolmogorov–Smirnov statistics
//! and their Monte-Carlo null law, and the likelihood-ratio test against the
//! normal model.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::frft::{edge_modulus, sample_cf, Inverter, TRUNCATION_THRESHOLD};
use crate::grid::GridSpec;
use crate::models::{CharacteristicFunction, NormalParams};
use crate::table::{DensityTable, TableKind};

pub const DEFAULT_NULL_REPS: usize = 20_000;
pub const MIN_NULL_REPS: usize = 1000;

/// Distribution function on the output lattice from the characteristic
/// function of `cf / (i t)`.
///
/// The slot at `t = 0` carries `-E[Y]` and the remaining regular part
/// `x_k * beta / (2 pi)` is added analytically. The raw values are then made
/// non-decreasing by pooling adjacent violators and clamped to `[0, 1]`; the
/// size of the repair is kept in the diagnostics.
pub fn cdf_from_cf<C: CharacteristicFunction + ?Sized>(model: &C, grid: &GridSpec) -> Result<DensityTable> {
    let zero = grid.zero_index();
    if grid.t(zero) != 0.0 {
        return Err(Error::Config("lattice has no zero-frequency point".into()));
    }
    let mean = model.mean();
    let cf = |t: f64| model.cf(t);
    let mut samples = sample_cf(cf, grid)?;
    for (j, s) in samples.iter_mut().enumerate() {
        *s = if j == zero {
            Complex64::new(-mean, 0.0)
        } else {
            *s / Complex64::new(0.0, grid.t(j))
        };
    }
    let edge = edge_modulus(cf, grid) / (grid.a / 2.0);
    let inverter = Inverter::new(*grid)?;
    let mut table = inverter.invert(&samples, TableKind::Cdf, edge)?;
    let slope = grid.beta / (2.0 * std::f64::consts::PI);
    for (k, v) in table.values.iter_mut().enumerate() {
        *v += 0.5 + slope * grid.x(k);
    }

    let violation = table
        .values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    isotonic(&mut table.values);
    let mut clamped = 0;
    for v in table.values.iter_mut() {
        if *v < 0.0 || *v > 1.0 {
            *v = v.clamp(0.0, 1.0);
            clamped += 1;
        }
    }
    table.diagnostics.max_monotonicity_violation = violation;
    table.diagnostics.clamped_points = clamped;
    if violation > 1e-6 {
        log::warn!("raw distribution function decreased by up to {violation:e} before the isotonic pass");
    }
    if table.diagnostics.edge_cf_modulus > TRUNCATION_THRESHOLD {
        log::warn!("|cf(t) / t| at the lattice edge is {:e}", table.diagnostics.edge_cf_modulus);
    }
    Ok(table)
}

/// Least-squares non-decreasing fit with unit weights, in place.
pub fn isotonic(values: &mut [f64]) {
    // Blocks of (sum, count).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                *blocks.last_mut().expect("two blocks") = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut k = 0;
    for (s, c) in blocks {
        let m = s / c as f64;
        for v in &mut values[k..k + c] {
            *v = m;
        }
        k += c;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsStatistic {
    pub d_n: f64,
    /// `max_j |F(x_j) - F_n(x_j)|`
    pub d_plus: f64,
    /// `max_j |F(x_j) - F_n(x_{j-1})|`, with `F_n(x_{-1}) = 0`.
    pub d_minus: f64,
}

/// KS statistic against a distribution-function table on the table's lattice.
pub fn ks_statistic(sample: &[f64], cdf: &DensityTable) -> Result<KsStatistic> {
    ks_statistic_on(sample, &cdf.lattice(), &cdf.values)
}

/// KS statistic on an explicit increasing lattice with model values `f`.
pub fn ks_statistic_on(sample: &[f64], lattice: &[f64], f: &[f64]) -> Result<KsStatistic> {
    let rows = comparison_rows(sample, lattice, f)?;
    let mut out = KsStatistic {
        d_n: 0.0,
        d_plus: 0.0,
        d_minus: 0.0,
    };
    for r in &rows {
        out.d_plus = out.d_plus.max(r.diff_same);
        out.d_minus = out.d_minus.max(r.diff_prev);
    }
    out.d_n = out.d_plus.max(out.d_minus);
    Ok(out)
}

/// One lattice point of the empirical-versus-model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub x: f64,
    /// Sample points in `(x_{j-1}, x_j]` (all points `<= x_0` for the first row).
    pub count: usize,
    pub ecdf: f64,
    pub cdf: f64,
    /// `|F(x_j) - F_n(x_{j-1})|`
    pub diff_prev: f64,
    /// `|F(x_j) - F_n(x_j)|`
    pub diff_same: f64,
}

pub fn comparison_rows(sample: &[f64], lattice: &[f64], f: &[f64]) -> Result<Vec<ComparisonRow>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if lattice.len() != f.len() {
        return Err(Error::LengthMismatch {
            expected: lattice.len(),
            actual: f.len(),
        });
    }
    if let Some(i) = sample.iter().position(|x| x.is_nan()) {
        return Err(Error::NonFiniteSample(i));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut below = 0usize;
    let mut prev_ecdf = 0.0;
    let mut rows = Vec::with_capacity(lattice.len());
    for (&x, &fx) in lattice.iter().zip(f) {
        let start = below;
        while below < sorted.len() && sorted[below] <= x {
            below += 1;
        }
        let ecdf = below as f64 / n;
        rows.push(ComparisonRow {
            x,
            count: below - start,
            ecdf,
            cdf: fx,
            diff_prev: (fx - prev_ecdf).abs(),
            diff_same: (fx - ecdf).abs(),
        });
        prev_ecdf = ecdf;
    }
    Ok(rows)
}

/// Classical one-sample KS distance between `sample` and a continuous law.
pub fn ks_classical<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut u: Vec<f64> = sample.iter().map(|&x| cdf(x)).collect();
    u.sort_by(f64::total_cmp);
    Ok(ks_sorted_uniform(&u))
}

fn ks_sorted_uniform(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    u.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let i = i as f64;
        d.max((i + 1.0) / n - v).max(v - i / n)
    })
}

/// Asymptotic Kolmogorov tail probability with Stephens' small-sample scaling.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Monte-Carlo law of the KS distance for samples of size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsNullDistribution {
    pub n: usize,
    pub seed: u64,
    /// Simulated distances, sorted ascending.
    pub draws: Vec<f64>,
}

impl KsNullDistribution {
    pub fn reps(&self) -> usize {
        self.draws.len()
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.draws.iter().map(|d| (d - m) * (d - m)).sum();
        (ss / (self.draws.len() - 1).max(1) as f64).sqrt()
    }

    /// Fraction of simulated distances strictly above `d_obs`.
    pub fn pvalue(&self, d_obs: f64) -> f64 {
        let above = self.draws.len() - self.draws.partition_point(|&d| d <= d_obs);
        above as f64 / self.draws.len() as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let idx = ((self.draws.len() - 1) as f64 * q).round() as usize;
        self.draws[idx]
    }
}

/// Null law under uniform draws. Each replicate uses its own ChaCha stream
/// `(seed, rep)`, so results do not depend on scheduling.
pub fn ks_null_mc(n: usize, reps: usize, seed: u64) -> Result<KsNullDistribution> {
    ks_null_mc_law(n, reps, seed, |rng: &mut ChaCha8Rng| rng.random::<f64>(), |u| u)
}

/// Null law simulated under an arbitrary continuous law given by a sampler
/// and its distribution function.
pub fn ks_null_mc_law<S, F>(n: usize, reps: usize, seed: u64, draw: S, cdf: F) -> Result<KsNullDistribution>
where
    S: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    F: Fn(f64) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if reps < MIN_NULL_REPS {
        return Err(Error::Config(format!("at least {MIN_NULL_REPS} replicates required, got {reps}")));
    }
    let mut draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut u: Vec<f64> = (0..n).map(|_| cdf(draw(&mut rng))).collect();
            u.sort_by(f64::total_cmp);
            ks_sorted_uniform(&u)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    Ok(KsNullDistribution { n, seed, draws })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub w: f64,
    pub dof: usize,
    pub pvalue: f64,
}

/// `W = 2 (L1 - L0)` against a chi-square law with `dof` degrees of freedom.
pub fn lr_test(loglik_h1: f64, loglik_h0: f64, dof: usize) -> Result<LrTest> {
    if dof == 0 {
        return Err(Error::InvalidParameter("degrees of freedom must be positive".into()));
    }
    let w = 2.0 * (loglik_h1 - loglik_h0);
    if w < -2e-6 {
        return Err(Error::NestingViolation(w));
    }
    let w = w.max(0.0);
    let pvalue = if w == 0.0 { 1.0 } else { gamma_ur(dof as f64 / 2.0, w / 2.0) };
    Ok(LrTest { w, dof, pvalue })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClmFit {
    pub params: NormalParams,
    pub loglik: f64,
    pub n: usize,
}

/// Normal maximum likelihood: sample mean and divisor-`n` standard deviation.
pub fn fit_clm(sample: &[f64]) -> Result<ClmFit> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall {
            required: 2,
            actual: sample.len(),
        });
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let loglik = -0.5 * n * ((2.0 * std::f64::consts::PI * var).ln() + 1.0);
    Ok(ClmFit {
        params: NormalParams::new(mean, var.sqrt())?,
        loglik,
        n: sample.len(),
    })
}

/// Goodness-of-fit summary for one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub method: String,
    pub model: String,
    pub n: usize,
    pub ks_stat: f64,
    pub ks_plus: f64,
    pub ks_minus: f64,
    pub ks_pvalue: f64,
    pub ks_pvalue_asymptotic: f64,
    pub lr_stat: Option<f64>,
    pub lr_dof: Option<usize>,
    pub lr_pvalue: Option<f64>,
}

impl GofReport {
    pub fn new(
        method: &str,
        model: &str,
        n: usize,
        ks: KsStatistic,
        null: &KsNullDistribution,
        lr: Option<LrTest>,
    ) -> Self {
        GofReport {
            method: method.to_string(),
            model: model.to_string(),
            n,
            ks_stat: ks.d_n,
            ks_plus: ks.d_plus,
            ks_minus: ks.d_minus,
            ks_pvalue: null.pvalue(ks.d_n),
            ks_pvalue_asymptotic: kolmogorov_pvalue(ks.d_n, n),
            lr_stat: lr.map(|t| t.w),
            lr_dof: lr.map(|t| t.dof),
            lr_pvalue: lr.map(|t| t.pvalue),
        }
    }

    pub const CSV_HEADER: [&'static str; 4] = ["Method", "Model", "KS-Statistics", "P_values"];

    pub fn csv_record(&self) -> (&str, &str, f64, f64) {
        (&self.method, &self.model, self.ks_stat, self.ks_pvalue)
    }
}

/// Writes reports as rows under [`GofReport::CSV_HEADER`].
pub fn write_reports_csv<W: std::io::Write>(reports: &[GofReport], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(GofReport::CSV_HEADER)?;
    for r in reports {
        wtr.serialize(r.csv_record())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: std::io::Write>(rows: &[ComparisonRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "count", "ecdf", "cdf", "diff_prev", "diff_same"])?;
    for r in rows {
        wtr.serialize((r.x, r.count, r.ecdf, r.cdf, r.diff_prev, r.diff_same))?;
    }
    wtr.flush()?;
    Ok(())
}

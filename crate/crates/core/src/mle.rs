//! Variance-Gamma log-likelihood, score and observed information from
//! inverted density and parameter-derivative tables, and damped
//! Newton–Raphson ascent.
//!
//! The five-parameter law depends on `(drift, sigma, theta)` only through
//! `theta * sigma^2` and `drift * theta`, so the likelihood is flat along
//! `(drift / c, sigma / sqrt(c), c theta)`. The observed information therefore
//! has a null direction. Newton steps use its pseudo-inverse (eigenvalues
//! below a relative cutoff are dropped), and the reported covariance is the
//! same pseudo-inverse.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::{Inverter, TRUNCATION_THRESHOLD};
use crate::grid::GridSpec;
use crate::models::{VgParam, VgParams, VG_DIM};
use crate::table::{DensityTable, Interpolator, SlopeRule, TableKind};

/// Densities below this are floored before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Number of distinct second derivatives.
pub const HESS_DIM: usize = VG_DIM * (VG_DIM + 1) / 2;

/// Position of `(i, j)` in the packed upper triangle, row major.
pub fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * VG_DIM - i * (i + 1) / 2 + j
}

/// Density table plus (optionally) its first and second parameter derivatives.
#[derive(Debug, Clone)]
pub struct VgTables {
    pub params: VgParams,
    pub order: u8,
    pub density: DensityTable,
    /// `d f / d p` in `VgParam::ALL` order; empty for order 0.
    pub first: Vec<DensityTable>,
    /// `d^2 f / d p d q`, packed upper triangle; empty below order 2.
    pub second: Vec<DensityTable>,
}

impl VgTables {
    pub fn first_of(&self, p: VgParam) -> Option<&DensityTable> {
        self.first.get(p.index())
    }

    pub fn second_of(&self, p: VgParam, q: VgParam) -> Option<&DensityTable> {
        self.second.get(packed_index(p.index(), q.index()))
    }

    pub fn truncation_warning(&self) -> bool {
        self.density.diagnostics.truncation_warning
    }
}

/// Inverts the characteristic function and, for `order >= 1`, its analytic
/// parameter derivatives on `grid`. The 1 + 5 + 15 inversions run in parallel.
pub fn build_tables(p: &VgParams, grid: &GridSpec, order: u8) -> Result<VgTables> {
    if order > 2 {
        return Err(Error::InvalidParameter(format!("derivative order {order} not in 0..=2")));
    }
    let inverter = Inverter::new(*grid)?;
    let n = grid.n;
    let width = match order {
        0 => 1,
        1 => 1 + VG_DIM,
        _ => 1 + VG_DIM + HESS_DIM,
    };

    // samples[s][j] for series s at t_j.
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| flatten(p, grid.t(j), width))
        .collect();
    for (j, row) in rows.iter().enumerate() {
        if row.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFiniteCf { index: j, t: grid.t(j) });
        }
    }
    let half = grid.a / 2.0;
    let lo = flatten(p, -half, width);
    let hi = flatten(p, half, width);

    let tables: Vec<DensityTable> = (0..width)
        .into_par_iter()
        .map(|s| {
            let samples: Vec<Complex64> = rows.iter().map(|r| r[s]).collect();
            let kind = if s == 0 { TableKind::Density } else { TableKind::Derivative };
            inverter.invert(&samples, kind, lo[s].norm().max(hi[s].norm()))
        })
        .collect::<Result<_>>()?;

    let mut it = tables.into_iter();
    let density = it.next().expect("density table");
    if density.diagnostics.truncation_warning {
        log::debug!(
            "|cf(+-a/2)| = {:e} exceeds {:e} at {:?}",
            density.diagnostics.edge_cf_modulus,
            TRUNCATION_THRESHOLD,
            p
        );
    }
    let first: Vec<_> = it.by_ref().take(if order >= 1 { VG_DIM } else { 0 }).collect();
    let second: Vec<_> = it.collect();
    Ok(VgTables {
        params: *p,
        order,
        density,
        first,
        second,
    })
}

fn flatten(p: &VgParams, t: f64, width: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(width);
    if width == 1 {
        out.push(crate::models::CharacteristicFunction::cf(p, t));
        return out;
    }
    let (c, g, h) = p.cf_all(t);
    out.push(c);
    out.extend_from_slice(&g);
    if width > 1 + VG_DIM {
        for i in 0..VG_DIM {
            for j in i..VG_DIM {
                out.push(h[i][j]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodDiagnostics {
    /// Sample points outside the table lattice.
    pub out_of_range: usize,
    /// Points whose interpolated density fell below the floor.
    pub floored: usize,
}

/// Log-likelihood with its gradient and negative Hessian at `params`.
#[derive(Debug, Clone)]
pub struct LikelihoodState {
    pub params: VgParams,
    pub loglik: f64,
    pub score: [f64; VG_DIM],
    pub obs_info: [[f64; VG_DIM]; VG_DIM],
    pub diagnostics: LikelihoodDiagnostics,
    pub tables: VgTables,
}

#[derive(Clone, Copy)]
struct Acc {
    ll: f64,
    score: [f64; VG_DIM],
    hess: [f64; HESS_DIM],
    diag: LikelihoodDiagnostics,
}

impl Acc {
    fn zero() -> Self {
        Acc {
            ll: 0.0,
            score: [0.0; VG_DIM],
            hess: [0.0; HESS_DIM],
            diag: LikelihoodDiagnostics::default(),
        }
    }

    fn merge(mut self, o: &Acc) -> Self {
        self.ll += o.ll;
        for (a, b) in self.score.iter_mut().zip(&o.score) {
            *a += b;
        }
        for (a, b) in self.hess.iter_mut().zip(&o.hess) {
            *a += b;
        }
        self.diag.out_of_range += o.diag.out_of_range;
        self.diag.floored += o.diag.floored;
        self
    }
}

const CHUNK: usize = 512;

/// Log-likelihood, score and observed information of `sample` under `p`,
/// with densities interpolated from freshly built tables.
pub fn loglik_score_info(sample: &[f64], p: &VgParams, grid: &GridSpec) -> Result<LikelihoodState> {
    check_sample(sample)?;
    let tables = build_tables(p, grid, 2)?;
    let state = evaluate(sample, &tables);
    Ok(state)
}

fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    Ok(())
}

/// Sums over the sample given order-2 tables. Chunks are reduced pairwise in
/// a fixed tree so the result does not depend on the thread count.
fn evaluate(sample: &[f64], tables: &VgTables) -> LikelihoodState {
    let g = tables.density.grid;
    let dens = tables.density.interpolator();
    let rules: Vec<SlopeRule> = dens.rules().to_vec();
    let replay = |t: &DensityTable| Interpolator::with_rules(g.x_min(), g.gamma, &t.values, rules.clone());
    let first: Vec<Interpolator> = tables.first.iter().map(replay).collect();
    let second: Vec<Interpolator> = tables.second.iter().map(replay).collect();

    let partial: Vec<Acc> = sample
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Acc::zero();
            for &x in chunk {
                let basis = match dens.basis(x) {
                    Ok(b) => b,
                    Err(_) => {
                        acc.ll += DENSITY_FLOOR.ln();
                        acc.diag.out_of_range += 1;
                        continue;
                    }
                };
                let f = dens.eval_basis(&basis);
                if !(f > DENSITY_FLOOR) {
                    acc.ll += DENSITY_FLOOR.ln();
                    acc.diag.floored += 1;
                    continue;
                }
                acc.ll += f.ln();
                let mut u = [0.0; VG_DIM];
                for (k, ip) in first.iter().enumerate() {
                    u[k] = ip.eval_basis(&basis) / f;
                    acc.score[k] += u[k];
                }
                for i in 0..VG_DIM {
                    for j in i..VG_DIM {
                        let idx = packed_index(i, j);
                        acc.hess[idx] += second[idx].eval_basis(&basis) / f - u[i] * u[j];
                    }
                }
            }
            acc
        })
        .collect();
    let total = pairwise(&partial);

    let mut obs_info = [[0.0; VG_DIM]; VG_DIM];
    for i in 0..VG_DIM {
        for j in 0..VG_DIM {
            obs_info[i][j] = -total.hess[packed_index(i, j)];
        }
    }
    LikelihoodState {
        params: tables.params,
        loglik: total.ll,
        score: total.score,
        obs_info,
        diagnostics: total.diag,
        tables: tables.clone(),
    }
}

fn pairwise(parts: &[Acc]) -> Acc {
    match parts.len() {
        0 => Acc::zero(),
        1 => parts[0],
        n => pairwise(&parts[..n / 2]).merge(&pairwise(&parts[n / 2..])),
    }
}

/// Log-likelihood only (density table, no derivatives).
pub fn loglik(sample: &[f64], p: &VgParams, grid: &GridSpec) -> Result<(f64, LikelihoodDiagnostics)> {
    check_sample(sample)?;
    let tables = build_tables(p, grid, 0)?;
    let dens = tables.density.interpolator();
    let partial: Vec<Acc> = sample
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Acc::zero();
            for &x in chunk {
                match dens.eval(x) {
                    Ok(f) if f > DENSITY_FLOOR => acc.ll += f.ln(),
                    Ok(_) => {
                        acc.ll += DENSITY_FLOOR.ln();
                        acc.diag.floored += 1;
                    }
                    Err(_) => {
                        acc.ll += DENSITY_FLOOR.ln();
                        acc.diag.out_of_range += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let total = pairwise(&partial);
    Ok((total.ll, total.diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub score_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Eigenvalues of the observed information below this fraction of the
    /// largest are treated as zero.
    pub rank_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            score_tol: 1e-6,
            max_iter: 100,
            max_halvings: 30,
            rank_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ScoreTol,
    MaxIter,
    LineSearchFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Start,
    Newton,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub params: VgParams,
    pub loglik: f64,
    pub score_inf_norm: f64,
    /// Step length factor that was accepted; 0 for the starting row.
    pub step_damping: f64,
    pub step: StepKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub iterations: Vec<TraceRow>,
    pub converged: bool,
    pub reason: StopReason,
}

impl FitTrace {
    /// Column layout: iteration, the five parameters, log-likelihood, score norm.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iteration", "mu", "drift", "sigma", "alpha", "theta", "loglik", "score_norm"])?;
        for r in &self.iterations {
            let [mu, drift, sigma, alpha, theta] = r.params.to_array();
            wtr.serialize((r.iteration, mu, drift, sigma, alpha, theta, r.loglik, r.score_inf_norm))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: VgParams,
    pub loglik: f64,
    pub score: [f64; VG_DIM],
    /// Pseudo-inverse of the observed information over the free parameters;
    /// rows and columns of frozen parameters are zero.
    pub covariance: [[f64; VG_DIM]; VG_DIM],
    pub std_errors: [f64; VG_DIM],
    /// Numerical rank of the observed information over the free parameters.
    pub info_rank: usize,
    pub frozen: Vec<VgParam>,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
    pub diagnostics: LikelihoodDiagnostics,
    pub n: usize,
}

impl FitResult {
    pub fn free_parameter_count(&self) -> usize {
        VG_DIM - self.frozen.len()
    }

    /// The equivalent parameters with `sigma = 1`, i.e.
    /// `(mu, drift / sigma^2, 1, alpha, theta sigma^2)`, with standard errors
    /// carried through the delta method. Unlike the raw estimates these are
    /// identified, so their errors are meaningful one coordinate at a time.
    pub fn unit_sigma(&self) -> (VgParams, [f64; VG_DIM]) {
        let [mu, d, s, a, th] = self.params.to_array();
        let s2 = s * s;
        let mapped = [mu, d / s2, 1.0, a, th * s2];
        let mut jac = [[0.0; VG_DIM]; VG_DIM];
        jac[0][0] = 1.0;
        jac[1][1] = 1.0 / s2;
        jac[1][2] = -2.0 * d / (s2 * s);
        jac[3][3] = 1.0;
        jac[4][2] = 2.0 * th * s;
        jac[4][4] = s2;
        let mut se = [0.0; VG_DIM];
        for (r, row) in jac.iter().enumerate() {
            let mut v = 0.0;
            for i in 0..VG_DIM {
                for j in 0..VG_DIM {
                    v += row[i] * self.covariance[i][j] * row[j];
                }
            }
            se[r] = v.max(0.0).sqrt();
        }
        (VgParams::from_array(mapped).expect("positive inputs map to positive outputs"), se)
    }
}

/// Unrestricted maximum likelihood fit.
pub fn fit_mle(
    sample: &[f64],
    init: &VgParams,
    grid: &GridSpec,
    opts: &FitOptions,
) -> Result<(FitResult, FitTrace)> {
    fit_mle_restricted(sample, init, grid, &BTreeSet::new(), opts)
}

/// Fit with the parameters in `frozen` held at their initial values. Only
/// `drift` may be frozen.
pub fn fit_mle_restricted(
    sample: &[f64],
    init: &VgParams,
    grid: &GridSpec,
    frozen: &BTreeSet<VgParam>,
    opts: &FitOptions,
) -> Result<(FitResult, FitTrace)> {
    if let Some(p) = frozen.iter().find(|p| **p != VgParam::Drift) {
        return Err(Error::InvalidParameter(format!("only drift can be frozen, got {}", p.name())));
    }
    check_sample(sample)?;
    let free: Vec<usize> = VgParam::ALL
        .iter()
        .filter(|p| !frozen.contains(p))
        .map(|p| p.index())
        .collect();

    let mut state = loglik_score_info(sample, init, grid)?;
    let mut rows = vec![TraceRow {
        iteration: 0,
        params: *init,
        loglik: state.loglik,
        score_inf_norm: free_norm(&state.score, &free),
        step_damping: 0.0,
        step: StepKind::Start,
    }];

    let mut reason = StopReason::MaxIter;
    for iter in 1..=opts.max_iter {
        let g_norm = free_norm(&state.score, &free);
        if g_norm < opts.score_tol {
            reason = StopReason::ScoreTol;
            break;
        }
        let (dir, kind) = direction(&state, &free, opts.rank_tol);
        let current = state.params.to_array();

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            if let Some(candidate) = trial_point(&current, &free, &dir, lambda) {
                let next = loglik_score_info(sample, &candidate, grid)?;
                if accept(&state, &next, &free) {
                    accepted = Some(next);
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(next) => {
                state = next;
                rows.push(TraceRow {
                    iteration: iter,
                    params: state.params,
                    loglik: state.loglik,
                    score_inf_norm: free_norm(&state.score, &free),
                    step_damping: lambda,
                    step: kind,
                });
            }
            None => {
                reason = StopReason::LineSearchFailure;
                break;
            }
        }
    }
    if reason == StopReason::MaxIter && free_norm(&state.score, &free) < opts.score_tol {
        reason = StopReason::ScoreTol;
    }

    let (covariance, info_rank) = pseudo_inverse(&state.obs_info, &free, opts.rank_tol);
    let mut std_errors = [0.0; VG_DIM];
    for i in 0..VG_DIM {
        std_errors[i] = covariance[i][i].max(0.0).sqrt();
    }
    let converged = reason == StopReason::ScoreTol;
    let edge = state.tables.density.diagnostics.edge_cf_modulus;
    if edge > TRUNCATION_THRESHOLD {
        log::warn!("|cf(+-a/2)| = {edge:e} at the final estimate; a wider frequency window may change the fit");
    }
    let result = FitResult {
        params: state.params,
        loglik: state.loglik,
        score: state.score,
        covariance,
        std_errors,
        info_rank,
        frozen: frozen.iter().copied().collect(),
        iterations: rows.len() - 1,
        converged,
        reason,
        diagnostics: state.diagnostics,
        n: sample.len(),
    };
    let trace = FitTrace {
        iterations: rows,
        converged,
        reason,
    };
    Ok((result, trace))
}

fn free_norm(score: &[f64; VG_DIM], free: &[usize]) -> f64 {
    free.iter().map(|&i| score[i].abs()).fold(0.0, f64::max)
}

fn reduced(info: &[[f64; VG_DIM]; VG_DIM], free: &[usize]) -> DMatrix<f64> {
    let m = free.len();
    DMatrix::from_fn(m, m, |r, c| 0.5 * (info[free[r]][free[c]] + info[free[c]][free[r]]))
}

/// Ascent direction over the free coordinates: pseudo-inverse Newton when the
/// observed information is positive semi-definite, scaled gradient otherwise.
fn direction(state: &LikelihoodState, free: &[usize], rank_tol: f64) -> (Vec<f64>, StepKind) {
    let info = reduced(&state.obs_info, free);
    let g = DVector::from_iterator(free.len(), free.iter().map(|&i| state.score[i]));
    let eig = SymmetricEigen::new(info.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let psd = top > 0.0 && eig.eigenvalues.iter().all(|&v| v >= -1e-8 * info.trace().abs());
    if psd {
        let mut step = DVector::zeros(free.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > rank_tol * top {
                let u = eig.eigenvectors.column(k);
                step += u * (u.dot(&g) / lam);
            }
        }
        if step.iter().all(|v| v.is_finite()) && step.norm() > 0.0 {
            return (step.iter().copied().collect(), StepKind::Newton);
        }
    }
    let norm = g.norm();
    let scale = if norm > 0.0 { 0.1 / norm } else { 0.0 };
    (g.iter().map(|v| v * scale).collect(), StepKind::Gradient)
}

/// `current + lambda * dir` on the free coordinates, or `None` if a positive
/// parameter would drop below a tenth of its current value.
fn trial_point(current: &[f64; VG_DIM], free: &[usize], dir: &[f64], lambda: f64) -> Option<VgParams> {
    let mut v = *current;
    for (k, &i) in free.iter().enumerate() {
        v[i] = current[i] + lambda * dir[k];
        if VgParam::ALL[i].is_positive() && v[i] < 0.1 * current[i] {
            return None;
        }
    }
    VgParams::from_array(v).ok()
}

/// Strict increase, or a change at roundoff level that reduces the score.
fn accept(old: &LikelihoodState, new: &LikelihoodState, free: &[usize]) -> bool {
    if !new.loglik.is_finite() {
        return false;
    }
    let delta = new.loglik - old.loglik;
    if delta > 0.0 {
        return true;
    }
    delta.abs() <= 1e-12 * old.loglik.abs().max(1.0)
        && free_norm(&new.score, free) < free_norm(&old.score, free)
}

fn pseudo_inverse(
    info: &[[f64; VG_DIM]; VG_DIM],
    free: &[usize],
    rank_tol: f64,
) -> ([[f64; VG_DIM]; VG_DIM], usize) {
    let m = reduced(info, free);
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut inv = DMatrix::zeros(free.len(), free.len());
    let mut rank = 0;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if top > 0.0 && lam > rank_tol * top {
            let u = eig.eigenvectors.column(k);
            inv += u * u.transpose() / lam;
            rank += 1;
        }
    }
    let mut out = [[0.0; VG_DIM]; VG_DIM];
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            out[i][j] = inv[(r, c)];
        }
    }
    (out, rank)
}

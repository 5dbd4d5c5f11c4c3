use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use vgfit_core::mle::loglik;
use vgfit_core::{
    fit_clm, fit_mle, ClmFit, fit_mle_restricted, fit_moments_avg, fit_moments_svg, sample_moments, FitOptions, FitResult,
    FitTrace, GridSpec, SampleMoments, VgParam, VgParams,
};

use crate::failure::{numerical, usage};
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Moments,
    Mle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Svg,
    Avg,
    Both,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FitArgs {
    /// Returns CSV with a `return` column (rows with `excluded_flag` = 1 are skipped).
    #[arg(long, required_unless_present = "summary", conflicts_with = "summary")]
    pub returns: Option<PathBuf>,
    /// JSON sample summary `{n, mean, variance, skewness, kurtosis}`; moment fits only.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Variant::Both)]
    pub model: Variant,
    /// Starting point of the likelihood search: `moments` or
    /// `mu,drift,sigma,alpha,theta` (drift is set to 0 for the symmetric fit).
    #[arg(long, default_value = "moments", allow_hyphen_values = true)]
    pub init: String,
    #[arg(long, default_value_t = 1e-6)]
    pub score_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

/// One row of the parameter table. Fields that do not apply are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub method: String,
    pub model: String,
    pub n: usize,
    pub mu: f64,
    pub drift: Option<f64>,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub loglik: Option<f64>,
    pub free_params: usize,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub se_mu: Option<f64>,
    pub se_drift: Option<f64>,
    pub se_sigma: Option<f64>,
    pub se_alpha: Option<f64>,
    pub se_theta: Option<f64>,
}

impl FitRecord {
    fn vg(method: &str, model: &str, n: usize, p: &VgParams, free_params: usize) -> Self {
        FitRecord {
            method: method.into(),
            model: model.into(),
            n,
            mu: p.mu,
            drift: Some(p.drift),
            sigma: p.sigma,
            alpha: Some(p.alpha),
            theta: Some(p.theta),
            loglik: None,
            free_params,
            iterations: None,
            converged: None,
            se_mu: None,
            se_drift: None,
            se_sigma: None,
            se_alpha: None,
            se_theta: None,
        }
    }

    fn clm(fit: &ClmFit) -> Self {
        FitRecord {
            method: "mle".into(),
            model: "clm".into(),
            n: fit.n,
            mu: fit.params.mu,
            drift: None,
            sigma: fit.params.sigma,
            alpha: None,
            theta: None,
            loglik: Some(fit.loglik),
            free_params: 2,
            iterations: None,
            converged: None,
            se_mu: None,
            se_drift: None,
            se_sigma: None,
            se_alpha: None,
            se_theta: None,
        }
    }

    fn mle(model: &str, fit: &FitResult) -> Self {
        let mut r = FitRecord::vg("mle", model, fit.n, &fit.params, fit.free_parameter_count());
        let se = |p: VgParam| (!fit.frozen.contains(&p)).then_some(fit.std_errors[p.index()]);
        r.loglik = Some(fit.loglik);
        r.iterations = Some(fit.iterations);
        r.converged = Some(fit.converged);
        r.se_mu = se(VgParam::Mu);
        r.se_drift = se(VgParam::Drift);
        r.se_sigma = se(VgParam::Sigma);
        r.se_alpha = se(VgParam::Alpha);
        r.se_theta = se(VgParam::Theta);
        r
    }

    /// Variance-Gamma parameters, if this row holds them.
    pub fn vg_params(&self) -> Result<Option<VgParams>> {
        match (self.drift, self.alpha, self.theta) {
            (Some(d), Some(a), Some(t)) => Ok(Some(VgParams::new(self.mu, d, self.sigma, a, t)?)),
            _ => Ok(None),
        }
    }
}

fn parse_init(s: &str) -> Result<Option<VgParams>> {
    if s == "moments" {
        return Ok(None);
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("--init: {e}")))?;
    let v: [f64; 5] = v
        .try_into()
        .map_err(|_| usage("--init needs `moments` or five comma-separated numbers"))?;
    Ok(Some(VgParams::from_array(v)?))
}

fn write_trace(out: &Output, stem: &str, trace: &FitTrace) -> Result<()> {
    out.emit(stem, |w| Ok(trace.write_csv(w)?), || Ok(serde_json::to_string_pretty(trace)?))?;
    Ok(())
}

pub fn run(g: &GlobalArgs, a: &FitArgs, out: &Output) -> Result<()> {
    let init = parse_init(&a.init)?;
    let (moments, sample) = match (&a.returns, &a.summary) {
        (Some(path), _) => {
            let sample = super::read_returns(path)?;
            (sample_moments(&sample)?, Some(sample))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let m: SampleMoments = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (m, None)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let want_moments = a.method != Method::Mle;
    let want_mle = a.method != Method::Moments;
    if want_mle && sample.is_none() {
        return Err(usage("likelihood fits need --returns"));
    }
    let variants: Vec<&str> = match a.model {
        Variant::Svg => vec!["svg"],
        Variant::Avg => vec!["avg"],
        Variant::Both => vec!["svg", "avg"],
    };
    let grid = super::grid(g)?;
    let opts = FitOptions {
        score_tol: a.score_tol,
        max_iter: a.max_iter,
        ..FitOptions::default()
    };

    let mut records = Vec::new();
    if let Some(sample) = &sample {
        records.push(FitRecord::clm(&fit_clm(sample)?));
    }
    let mut stalled = Vec::new();
    for model in variants {
        let moment_fit = || -> Result<VgParams> {
            Ok(if model == "svg" {
                fit_moments_svg(&moments)?
            } else {
                fit_moments_avg(&moments)?
            })
        };
        if want_moments {
            let p = moment_fit()?;
            let mut r = FitRecord::vg("moments", model, moments.n, &p, if model == "svg" { 4 } else { 5 });
            if let Some(sample) = &sample {
                r.loglik = Some(loglik(sample, &p, &grid)?.0);
            }
            records.push(r);
        }
        if let (true, Some(sample)) = (want_mle, &sample) {
            let (fit, trace) = mle(sample, model, init, &moment_fit, &grid, &opts)?;
            println!(
                "mle {model}: loglik {} after {} iterations ({:?})",
                fit.loglik, fit.iterations, fit.reason
            );
            write_trace(out, &format!("trace_mle_{model}"), &trace)?;
            if !fit.converged {
                stalled.push(format!("{model} ({:?} after {} iterations)", fit.reason, fit.iterations));
            }
            records.push(FitRecord::mle(model, &fit));
        }
    }
    out.records("fits", &records)?;
    if !stalled.is_empty() {
        return Err(numerical(format!(
            "likelihood search did not converge: {}; see the trace files",
            stalled.join(", ")
        )));
    }
    Ok(())
}

fn mle(
    sample: &[f64],
    model: &str,
    init: Option<VgParams>,
    moment_fit: &dyn Fn() -> Result<VgParams>,
    grid: &GridSpec,
    opts: &FitOptions,
) -> Result<(FitResult, FitTrace)> {
    let start = match init {
        Some(p) => p,
        None => moment_fit().context("moment estimate for the starting point")?,
    };
    if model == "svg" {
        let start = VgParams::new(start.mu, 0.0, start.sigma, start.alpha, start.theta)?;
        let frozen: BTreeSet<_> = [VgParam::Drift].into_iter().collect();
        Ok(fit_mle_restricted(sample, &start, grid, &frozen, opts)?)
    } else {
        Ok(fit_mle(sample, &start, grid, opts)?)
    }
}

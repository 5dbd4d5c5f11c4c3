use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use vgfit_core::gof::{comparison_rows, ks_statistic_on, write_comparison_csv, write_reports_csv, DEFAULT_NULL_REPS};
use vgfit_core::{cdf_from_cf, ks_null_mc, lr_test, GofReport, Model, NormalParams};

use super::fit::FitRecord;
use crate::failure::{data, usage};
use crate::output::Output;
use crate::{Format, GlobalArgs};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GofArgs {
    /// Returns CSV, as for `fit`.
    #[arg(long)]
    pub returns: PathBuf,
    /// Parameter table written by `fit` (.csv or .json).
    #[arg(long)]
    pub fits: PathBuf,
    /// Monte-Carlo replications for the KS p-value.
    #[arg(long, default_value_t = DEFAULT_NULL_REPS)]
    pub reps: usize,
    /// Evaluate the KS statistic on multiples of this step covering the
    /// sample instead of the distribution table's own lattice.
    #[arg(long)]
    pub lattice_step: Option<f64>,
}

fn read_fits(path: &Path) -> Result<Vec<FitRecord>> {
    let bad = |e: &dyn std::fmt::Display| data(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| bad(&e))
    } else {
        let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        rdr.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| bad(&e))
    }
}

fn model_of(r: &FitRecord) -> Result<Model> {
    Ok(match r.vg_params()? {
        Some(p) => Model::Vg(p),
        None => Model::Normal(NormalParams::new(r.mu, r.sigma)?),
    })
}

fn step_lattice(sample: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(usage(format!("--lattice-step must be positive, got {h}")));
    }
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (first, last) = ((lo / h).floor() as i64, (hi / h).ceil() as i64);
    Ok((first..=last).map(|k| k as f64 * h).collect())
}

pub fn run(g: &GlobalArgs, a: &GofArgs, out: &Output) -> Result<()> {
    let sample = super::read_returns(&a.returns)?;
    let fits = read_fits(&a.fits)?;
    if fits.is_empty() {
        return Err(data(format!("{} holds no fitted models", a.fits.display())));
    }
    let grid = super::grid(g)?;
    let null = ks_null_mc(sample.len(), a.reps, g.seed)?;
    let clm = fits.iter().find(|r| r.model == "clm").and_then(|r| r.loglik.map(|l| (l, r.free_params)));

    let mut reports = Vec::new();
    for r in &fits {
        let cdf = cdf_from_cf(&model_of(r)?, &grid)?;
        let (lattice, f) = match a.lattice_step {
            None => (cdf.lattice(), cdf.values.clone()),
            Some(h) => {
                let lattice = step_lattice(&sample, h)?;
                let ip = cdf.interpolator();
                let f = lattice.iter().map(|&x| ip.eval(x)).collect::<vgfit_core::Result<Vec<_>>>()?;
                (lattice, f)
            }
        };
        let ks = ks_statistic_on(&sample, &lattice, &f)?;
        let lr = match (clm, r.loglik) {
            (Some((l0, k0)), Some(l1)) if r.method == "mle" && r.model != "clm" => {
                Some(lr_test(l1, l0, r.free_params.saturating_sub(k0))?)
            }
            _ => None,
        };
        let report = GofReport::new(&r.method, &r.model, sample.len(), ks, &null, lr);
        println!(
            "{} {}: d_n {} p {} (asymptotic {})",
            r.method, r.model, report.ks_stat, report.ks_pvalue, report.ks_pvalue_asymptotic
        );
        let rows = comparison_rows(&sample, &lattice, &f)?;
        out.emit(
            &format!("comparison_{}_{}", r.method, r.model),
            |w| Ok(write_comparison_csv(&rows, w)?),
            || Ok(serde_json::to_string_pretty(&rows)?),
        )?;
        reports.push(report);
    }
    match out.format {
        Format::Csv => {
            out.emit("gof", |w| Ok(write_reports_csv(&reports, w)?), || unreachable!())?;
            out.records("gof_detail", &reports)?;
        }
        Format::Json => {
            out.records("gof", &reports)?;
        }
    }
    Ok(())
}

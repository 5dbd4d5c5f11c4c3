use anyhow::Result;
use clap::{Args, ValueEnum};
use vgfit_core::mle::packed_index;
use vgfit_core::{build_tables, invert_cf, CharacteristicFunction, CpnParams, DensityTable, Model, NormalParams, VgParam, VgParams};

use crate::failure::usage;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Normal,
    Vg,
    Cpn,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Variance-Gamma drift.
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Variance-Gamma activity shape.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Variance-Gamma activity scale.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Compound Poisson-normal jump intensity.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Also write the 5 first (1) or 5 first and 15 second (2) parameter
    /// derivative tables. Variance-Gamma only.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub derivatives: Option<u8>,
}

impl DensityArgs {
    fn model(&self) -> Result<Model> {
        let reject = |flag: &str, set: bool| {
            if set {
                Err(usage(format!("--{flag} does not apply to this family")))
            } else {
                Ok(())
            }
        };
        Ok(match self.family {
            Family::Normal => {
                reject("lambda", self.lambda.is_some())?;
                Model::Normal(NormalParams::new(self.mu, self.sigma)?)
            }
            Family::Vg => {
                reject("lambda", self.lambda.is_some())?;
                Model::Vg(VgParams::new(self.mu, self.drift, self.sigma, self.alpha, self.theta)?)
            }
            Family::Cpn => {
                let lambda = self.lambda.ok_or_else(|| usage("--lambda is required for the cpn family"))?;
                Model::Cpn(CpnParams::new(self.mu, self.sigma, lambda)?)
            }
        })
    }
}

fn emit(out: &Output, stem: &str, t: &DensityTable) -> Result<()> {
    out.emit(stem, |w| Ok(t.write_csv(w)?), || Ok(t.to_json()?))?;
    Ok(())
}

fn report(t: &DensityTable) {
    let d = &t.diagnostics;
    println!(
        "points {} on [{}, {}], integral {}, max |imag| {:e}, edge |cf| {:e}{}",
        t.values.len(),
        t.grid.x_min(),
        t.grid.x_max(),
        t.integral(),
        d.max_imag_residual,
        d.edge_cf_modulus,
        if d.truncation_warning { " (truncation warning)" } else { "" }
    );
}

pub fn run(g: &GlobalArgs, a: &DensityArgs, out: &Output) -> Result<()> {
    let grid = super::grid(g)?;
    let model = a.model()?;
    match (model, a.derivatives) {
        (Model::Vg(p), Some(order)) => {
            let tables = build_tables(&p, &grid, order)?;
            report(&tables.density);
            emit(out, "density", &tables.density)?;
            for (i, t) in tables.first.iter().enumerate() {
                emit(out, &format!("d_{}", VgParam::ALL[i].name()), t)?;
            }
            for i in 0..VgParam::ALL.len() {
                for j in i..VgParam::ALL.len() {
                    if let Some(t) = tables.second.get(packed_index(i, j)) {
                        let (pi, pj) = (VgParam::ALL[i].name(), VgParam::ALL[j].name());
                        emit(out, &format!("d2_{pi}_{pj}"), t)?;
                    }
                }
            }
        }
        (_, Some(_)) => return Err(usage("--derivatives is only available for the vg family")),
        (m, None) => {
            let t = invert_cf(|t| m.cf(t), &grid)?;
            report(&t);
            emit(out, "density", &t)?;
        }
    }
    Ok(())
}

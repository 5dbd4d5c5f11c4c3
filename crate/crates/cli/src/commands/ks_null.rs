use anyhow::Result;
use clap::Args;
use serde::Serialize;
use vgfit_core::gof::DEFAULT_NULL_REPS;
use vgfit_core::ks_null_mc;

use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct KsNullArgs {
    /// Sample size.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_NULL_REPS)]
    pub reps: usize,
    /// Observed statistic whose Monte-Carlo p-value is reported.
    #[arg(long)]
    pub d_obs: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    n: usize,
    reps: usize,
    seed: u64,
    mean: f64,
    sd: f64,
    q90: f64,
    q95: f64,
    q99: f64,
    d_obs: Option<f64>,
    pvalue: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Draw {
    d_n: f64,
}

pub fn run(g: &GlobalArgs, a: &KsNullArgs, out: &Output) -> Result<()> {
    let null = ks_null_mc(a.n, a.reps, g.seed)?;
    let summary = Summary {
        n: a.n,
        reps: null.reps(),
        seed: g.seed,
        mean: null.mean(),
        sd: null.sd(),
        q90: null.quantile(0.90),
        q95: null.quantile(0.95),
        q99: null.quantile(0.99),
        d_obs: a.d_obs,
        pvalue: a.d_obs.map(|d| null.pvalue(d)),
    };
    println!("mean {} sd {}", summary.mean, summary.sd);
    if let Some(p) = summary.pvalue {
        println!("p-value {p}");
    }
    out.value("ks_null_summary", &summary)?;
    let draws: Vec<Draw> = null.draws.iter().map(|&d_n| Draw { d_n }).collect();
    out.records("ks_null_draws", &draws)?;
    Ok(())
}

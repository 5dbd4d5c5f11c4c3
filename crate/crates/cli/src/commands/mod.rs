pub mod density;
pub mod fit;
pub mod gof;
pub mod ks_null;
pub mod returns;

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use vgfit_core::GridSpec;

use crate::failure::{data, usage};
use crate::output::Output;
use crate::{Cli, Command, GlobalArgs};

pub fn run(cli: &Cli) -> Result<()> {
    let out = Output::new(&cli.global.out_dir, cli.global.format)?;
    match &cli.command {
        Command::Density(a) => density::run(&cli.global, a, &out),
        Command::Fit(a) => fit::run(&cli.global, a, &out),
        Command::Gof(a) => gof::run(&cli.global, a, &out),
        Command::Returns(a) => returns::run(a, &out),
        Command::KsNull(a) => ks_null::run(&cli.global, a, &out),
    }
}

pub fn grid(g: &GlobalArgs) -> Result<GridSpec> {
    let spec = match g.grid_gamma {
        Some(gamma) => GridSpec::with_gamma(g.grid_a, g.grid_n, gamma),
        None => GridSpec::new(g.grid_a, g.grid_n),
    };
    spec.map_err(|e| usage(e.to_string()))
}

#[derive(Deserialize)]
struct ReturnRow {
    #[serde(rename = "return")]
    value: f64,
    #[serde(default)]
    excluded_flag: Option<u8>,
}

/// Retained returns from a CSV with a `return` column, such as the file the
/// `returns` command writes. Rows flagged as excluded are skipped.
pub fn read_returns(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ReturnRow>().enumerate() {
        let row = row.map_err(|e| data(format!("{} line {}: {e}", path.display(), i + 2)))?;
        if row.excluded_flag.unwrap_or(0) == 0 {
            out.push(row.value);
        }
    }
    if out.is_empty() {
        return Err(data(format!("{} holds no retained returns", path.display())));
    }
    Ok(out)
}

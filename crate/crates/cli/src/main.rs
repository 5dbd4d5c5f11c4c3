mod commands;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::exit_code;

#[derive(Debug, Parser)]
#[command(name = "vgfit", version, about = "Fourier inversion, fitting and goodness of fit for Variance-Gamma returns")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Frequency window width `a`; the input lattice spans [-a/2, a/2).
    #[arg(long, global = true, default_value_t = 20.0)]
    pub grid_a: f64,
    /// Number of lattice points (power of two).
    #[arg(long, global = true, default_value_t = 2048)]
    pub grid_n: usize,
    /// Output lattice step; defaults to a / n.
    #[arg(long, global = true)]
    pub grid_gamma: Option<f64>,
    /// Seed for Monte-Carlo work.
    #[arg(long, global = true, default_value_t = 20240)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory that receives output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invert a characteristic function into a density table.
    Density(commands::density::DensityArgs),
    /// Moment and maximum likelihood fits of the Variance-Gamma model.
    Fit(commands::fit::FitArgs),
    /// Kolmogorov-Smirnov and likelihood-ratio tests for fitted models.
    Gof(commands::gof::GofArgs),
    /// Log returns, outlier filtering, summary statistics and histogram.
    Returns(commands::returns::ReturnsArgs),
    /// Monte-Carlo null distribution of the KS statistic.
    KsNull(commands::ks_null::KsNullArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("VGFIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use vgfit_core::data::{calibrate_abs_threshold, histogram, DEFAULT_BIN_WIDTH};
use vgfit_core::{filter_outliers, load_prices, log_returns, summarize, OutlierRule, PriceColumns, SampleMoments};

use crate::failure::usage;
use crate::output::Output;

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ReturnsArgs {
    /// Price CSV with a date column and an adjusted-close column.
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, default_value = "Date")]
    pub date_column: String,
    #[arg(long, default_value = "Adj Close")]
    pub price_column: String,
    /// 100 for percent log returns, 1 for raw log returns.
    #[arg(long, default_value = "100", value_parser = ["1", "100"])]
    pub scale: String,
    /// Outlier rule: `none`, `abs:T` (drop |r| > T), `zscore:Z`, or
    /// `exclude:K` (absolute threshold calibrated to drop exactly K returns).
    #[arg(long, default_value = "none")]
    pub outliers: String,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Left edge of one histogram bin; all bins are offset from it by whole widths.
    #[arg(long, default_value_t = 0.0)]
    pub bin_origin: f64,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    sample: &'static str,
    n: usize,
    mean: f64,
    variance: f64,
    variance_unbiased: f64,
    skewness: f64,
    kurtosis: f64,
}

impl SummaryRow {
    fn new(sample: &'static str, m: &SampleMoments) -> Self {
        SummaryRow {
            sample,
            n: m.n,
            mean: m.mean,
            variance: m.variance,
            variance_unbiased: m.variance_unbiased,
            skewness: m.skewness,
            kurtosis: m.kurtosis,
        }
    }
}

enum RuleSpec {
    Fixed(OutlierRule),
    Exclude(usize),
}

fn parse_rule(s: &str) -> Result<RuleSpec> {
    if s == "none" {
        return Ok(RuleSpec::Fixed(OutlierRule::None));
    }
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("--outliers: expected none, abs:T, zscore:Z or exclude:K, got `{s}`")))?;
    let number = || value.parse::<f64>().map_err(|e| usage(format!("--outliers {s}: {e}")));
    Ok(match kind {
        "abs" => RuleSpec::Fixed(OutlierRule::AbsThreshold(number()?)),
        "zscore" => RuleSpec::Fixed(OutlierRule::Zscore(number()?)),
        "exclude" => RuleSpec::Exclude(value.parse().map_err(|e| usage(format!("--outliers {s}: {e}")))?),
        _ => return Err(usage(format!("--outliers: unknown rule `{kind}`"))),
    })
}

pub fn run(a: &ReturnsArgs, out: &Output) -> Result<()> {
    let spec = parse_rule(&a.outliers)?;
    let columns = PriceColumns {
        date: a.date_column.clone(),
        price: a.price_column.clone(),
    };
    let prices = load_prices(&a.prices, &columns).with_context(|| format!("loading {}", a.prices.display()))?;
    let scale: f64 = a.scale.parse().expect("restricted by clap");
    let raw = log_returns(&prices, scale)?;
    let rule = match spec {
        RuleSpec::Fixed(r) => r,
        RuleSpec::Exclude(k) => {
            let t = calibrate_abs_threshold(&raw, k)?;
            println!("threshold {t} excludes {k} returns");
            OutlierRule::AbsThreshold(t)
        }
    };
    let kept = filter_outliers(&raw, rule)?;
    let all = summarize(&raw)?;
    let retained = summarize(&kept)?;
    println!(
        "{} prices, {} returns, {} retained, {} excluded",
        prices.len(),
        raw.len(),
        kept.len(),
        kept.excluded.len()
    );

    out.emit("returns", |w| Ok(kept.write_csv(w)?), || Ok(kept.to_json()?))?;
    out.records("excluded", &kept.excluded)?;
    out.records("summary", &[SummaryRow::new("all", &all), SummaryRow::new("retained", &retained)])?;
    let bins = histogram(&kept.returns, a.bin_width, a.bin_origin)?;
    out.records("histogram", &bins)?;
    Ok(())
}

//! Price series ingestion, log returns, outlier filtering and summaries.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{sample_moments, SampleMoments};

pub const DEFAULT_BIN_WIDTH: f64 = 0.035;

/// Names of the date and price columns in the input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceColumns {
    pub date: String,
    pub price: String,
}

impl Default for PriceColumns {
    fn default() -> Self {
        PriceColumns {
            date: "Date".into(),
            price: "Adj Close".into(),
        }
    }
}

/// Dated adjusted closes, strictly increasing in date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

pub fn load_prices(path: impl AsRef<Path>, columns: &PriceColumns) -> Result<PriceSeries> {
    read_prices(std::fs::File::open(path)?, columns)
}

/// Parses a price CSV. Rows may come in any order; they are sorted by date.
pub fn read_prices<R: Read>(reader: R, columns: &PriceColumns) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (di, pi) = (find(&columns.date)?, find(&columns.price)?);

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let date = parse_date(field(di)).ok_or_else(|| Error::Parse {
            line,
            message: format!("unparseable date {:?}", field(di)),
        })?;
        let price: f64 = field(pi).parse().map_err(|_| Error::Parse {
            line,
            message: format!("unparseable price {:?}", field(pi)),
        })?;
        if !price.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite price {price}"),
            });
        }
        if price <= 0.0 {
            return Err(Error::NonPositivePrice {
                date: date.to_string(),
                price,
            });
        }
        rows.push((date, price));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0.to_string()));
    }
    if rows.len() < 2 {
        return Err(Error::SampleTooSmall {
            required: 2,
            actual: rows.len(),
        });
    }
    let (dates, prices) = rows.into_iter().unzip();
    Ok(PriceSeries { dates, prices })
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok().map(|d| d.date()))
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok().map(|d| d.date()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedReturn {
    pub date: NaiveDate,
    pub value: f64,
    pub reason: String,
}

/// Retained returns, dated by the later of the two prices, plus the
/// returns an outlier rule removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// 100 for percent returns, 1 for raw log returns.
    pub scale: f64,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub excluded: Vec<ExcludedReturn>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// All returns, retained and excluded, in date order as
    /// `date,return,excluded_flag,reason`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut all: Vec<(NaiveDate, f64, bool, &str)> = self
            .dates
            .iter()
            .zip(&self.returns)
            .map(|(d, r)| (*d, *r, false, ""))
            .chain(self.excluded.iter().map(|e| (e.date, e.value, true, e.reason.as_str())))
            .collect();
        all.sort_by_key(|r| r.0);
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["date", "return", "excluded_flag", "reason"])?;
        for (d, r, flag, reason) in all {
            wtr.serialize((d, r, flag as u8, reason))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `scale * log(S_j / S_{j-1})`.
pub fn log_returns(s: &PriceSeries, scale: f64) -> Result<ReturnSeries> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("return scale must be positive, got {scale}")));
    }
    if s.len() < 2 {
        return Err(Error::SampleTooSmall {
            required: 2,
            actual: s.len(),
        });
    }
    let returns = s.prices.windows(2).map(|w| scale * (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries {
        scale,
        dates: s.dates[1..].to_vec(),
        returns,
        excluded: Vec::new(),
    })
}

/// Prices implied by a starting price and unfiltered returns.
pub fn reconstruct_prices(start: f64, returns: &[f64], scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    out.push(start);
    let mut log_p = start.ln();
    for r in returns {
        log_p += r / scale;
        out.push(log_p.exp());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum OutlierRule {
    None,
    /// Remove `|r| > threshold`.
    AbsThreshold(f64),
    /// Remove `|r - mean| > z * sd`, recomputing mean and sd on the retained
    /// set until nothing more is removed.
    Zscore(f64),
}

pub fn filter_outliers(r: &ReturnSeries, rule: OutlierRule) -> Result<ReturnSeries> {
    let total = r.returns.len() + r.excluded.len();
    let mut out = r.clone();
    match rule {
        OutlierRule::None => return Ok(out),
        OutlierRule::AbsThreshold(t) => {
            require_positive_rule(t)?;
            let reason = format!("abs>{t}");
            remove_where(&mut out, |x| x.abs() > t, &reason);
        }
        OutlierRule::Zscore(z) => {
            require_positive_rule(z)?;
            let reason = format!("zscore>{z}");
            loop {
                let n = out.returns.len() as f64;
                if n < 2.0 {
                    break;
                }
                let mean = out.returns.iter().sum::<f64>() / n;
                let sd = (out.returns.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
                if !(sd > 0.0) || remove_where(&mut out, |x| (x - mean).abs() > z * sd, &reason) == 0 {
                    break;
                }
            }
        }
    }
    let removed = out.excluded.len() - r.excluded.len();
    if 2 * removed > total {
        return Err(Error::SuspiciousRule { removed, total });
    }
    Ok(out)
}

fn require_positive_rule(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("outlier rule parameter must be positive, got {v}")))
    }
}

fn remove_where(s: &mut ReturnSeries, drop: impl Fn(f64) -> bool, reason: &str) -> usize {
    let mut dates = Vec::with_capacity(s.dates.len());
    let mut returns = Vec::with_capacity(s.returns.len());
    let mut removed = 0;
    for (&d, &x) in s.dates.iter().zip(&s.returns) {
        if drop(x) {
            s.excluded.push(ExcludedReturn {
                date: d,
                value: x,
                reason: reason.to_string(),
            });
            removed += 1;
        } else {
            dates.push(d);
            returns.push(x);
        }
    }
    s.dates = dates;
    s.returns = returns;
    removed
}

/// Absolute threshold that excludes exactly `k` returns: halfway between the
/// k-th and (k+1)-th largest magnitudes.
pub fn calibrate_abs_threshold(r: &ReturnSeries, k: usize) -> Result<f64> {
    let mut mags: Vec<f64> = r.returns.iter().map(|x| x.abs()).collect();
    if k >= mags.len() {
        return Err(Error::Config(format!("cannot exclude {k} of {} returns", mags.len())));
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let keep = mags[k];
    if k == 0 {
        return Ok(keep.max(f64::MIN_POSITIVE));
    }
    let drop = mags[k - 1];
    if drop == keep {
        return Err(Error::Config(format!(
            "returns {k} and {} tie in magnitude; no threshold excludes exactly {k}",
            k + 1
        )));
    }
    Ok(0.5 * (drop + keep))
}

pub fn summarize(r: &ReturnSeries) -> Result<SampleMoments> {
    sample_moments(&r.returns)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Counts in half-open bins `[origin + k w, origin + (k + 1) w)` covering the data.
pub fn histogram(xs: &[f64], width: f64, origin: f64) -> Result<Vec<HistogramBin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {width}")));
    }
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    let bin = |x: f64| ((x - origin) / width).floor() as i64;
    let lo = xs.iter().map(|&x| bin(x)).min().expect("non-empty");
    let hi = xs.iter().map(|&x| bin(x)).max().expect("non-empty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &x in xs {
        counts[(bin(x) - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let k = (lo + i as i64) as f64;
            HistogramBin {
                lo: origin + k * width,
                hi: origin + (k + 1.0) * width,
                count,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<PriceSeries> {
        read_prices(s.as_bytes(), &PriceColumns::default())
    }

    #[test]
    fn three_rows() {
        let s = read("Date,Open,Adj Close\n2020-01-02,1,100\n2020-01-03,1,101\n2020-01-06,1,99.5\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.prices, [100.0, 101.0, 99.5]);
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let s = read("Date,Adj Close\n2020-01-03,2\n2020-01-02T00:00:00Z,1\n").unwrap();
        assert_eq!(s.prices, [1.0, 2.0]);
    }

    #[test]
    fn input_errors() {
        let dup = read("Date,Adj Close\n2020-01-02,1\n2020-01-02,2\n").unwrap_err();
        assert!(matches!(&dup, Error::DuplicateDate(d) if d == "2020-01-02"), "{dup}");
        let bad = read("Date,Adj Close\n2020-01-02,1\n2020-01-03,x\n").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 3, .. }), "{bad}");
        let neg = read("Date,Adj Close\n2020-01-02,1\n2020-01-03,0\n").unwrap_err();
        assert!(matches!(neg, Error::NonPositivePrice { .. }));
        assert!(matches!(read("Day,Close\n"), Err(Error::Parse { line: 1, .. })));
        let custom = PriceColumns {
            date: "Day".into(),
            price: "Close".into(),
        };
        assert!(read_prices("Day,Close\n2020-01-02,1\n2020-01-03,2\n".as_bytes(), &custom).is_ok());
    }

    fn series(prices: &[f64]) -> PriceSeries {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        PriceSeries {
            dates: (0..prices.len()).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            prices: prices.to_vec(),
        }
    }

    #[test]
    fn log_return_values() {
        assert_eq!(log_returns(&series(&[100.0, 100.0]), 100.0).unwrap().returns, [0.0]);
        let r = log_returns(&series(&[100.0, 100.0 * 0.01f64.exp()]), 100.0).unwrap();
        assert!((r.returns[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.dates[0], series(&[1.0, 1.0]).dates[1]);
    }

    #[test]
    fn price_round_trip() {
        let p = [100.0, 101.5, 99.0, 120.25, 80.0];
        let r = log_returns(&series(&p), 100.0).unwrap();
        let back = reconstruct_prices(p[0], &r.returns, 100.0);
        for (a, b) in p.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-10 * a);
        }
    }

    fn returns(xs: &[f64]) -> ReturnSeries {
        let mut prices = vec![100.0];
        for x in xs {
            prices.push(prices.last().unwrap() * (x / 100.0).exp());
        }
        let mut r = log_returns(&series(&prices), 100.0).unwrap();
        r.returns = xs.to_vec();
        r
    }

    #[test]
    fn filter_rules() {
        let r = returns(&[0.0, 0.0, 0.0, 50.0]);
        assert_eq!(filter_outliers(&r, OutlierRule::None).unwrap(), r);
        let f = filter_outliers(&r, OutlierRule::AbsThreshold(10.0)).unwrap();
        assert_eq!((f.len(), f.excluded.len()), (3, 1));
        assert_eq!(f.excluded[0].value, 50.0);
        let wide = returns(&[5.0, -5.0, 6.0, 0.1]);
        assert!(matches!(
            filter_outliers(&wide, OutlierRule::AbsThreshold(1.0)),
            Err(Error::SuspiciousRule { removed: 3, total: 4 })
        ));
        assert!(filter_outliers(&r, OutlierRule::Zscore(-1.0)).is_err());
    }

    #[test]
    fn filters_are_idempotent() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).chain([15.0, -12.0, 9.0]).collect();
        let r = returns(&xs);
        for rule in [OutlierRule::AbsThreshold(5.0), OutlierRule::Zscore(3.0)] {
            let once = filter_outliers(&r, rule).unwrap();
            let twice = filter_outliers(&once, rule).unwrap();
            assert_eq!(once, twice);
            assert!(once.excluded.len() >= 2);
        }
    }

    #[test]
    fn removing_extremes_lowers_kurtosis() {
        let xs: Vec<f64> = (0..500).map(|i| ((i * 61) % 499) as f64 / 250.0 - 1.0).chain([12.0, -11.0, 13.0, -12.5]).collect();
        let r = returns(&xs);
        let f = filter_outliers(&r, OutlierRule::AbsThreshold(5.0)).unwrap();
        let (a, b) = (summarize(&r).unwrap(), summarize(&f).unwrap());
        assert!(b.kurtosis <= a.kurtosis && b.skewness.abs() <= a.skewness.abs() + 1e-12);
    }

    #[test]
    fn calibration_excludes_exactly_k() {
        let r = returns(&[0.1, -3.0, 2.0, 0.5, -0.7, 4.0, 0.0, 0.2]);
        for k in 0..4 {
            let t = calibrate_abs_threshold(&r, k).unwrap();
            let f = filter_outliers(&r, OutlierRule::AbsThreshold(t)).unwrap();
            assert_eq!(f.excluded.len(), k);
        }
        let tie = returns(&[1.0, -1.0, 0.0, 0.5]);
        assert!(calibrate_abs_threshold(&tie, 1).is_err());
    }

    #[test]
    fn csv_marks_exclusions() {
        let f = filter_outliers(&returns(&[0.0, 50.0, 0.5]), OutlierRule::AbsThreshold(10.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "date,return,excluded_flag,reason");
        assert_eq!(lines[2], "2020-01-03,50.0,1,abs>10");
        assert_eq!(lines[3], "2020-01-04,0.5,0,");
        let v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(v["excluded"][0]["reason"], "abs>10");
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.01, 0.04, -0.02], 0.035, 0.0).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), [1, 2, 1]);
        assert!((h[0].lo + 0.035).abs() < 1e-15);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 4);
        assert!(histogram(&[1.0], 0.0, 0.0).is_err());
    }
}

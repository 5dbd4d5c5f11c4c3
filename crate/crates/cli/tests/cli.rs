use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vgfit_core::{CpnParams, NormalParams, VgParams};

fn vgfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vgfit"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env("VGFIT_LOG", "off")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vgfit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_table(path: &Path) -> Vec<(f64, f64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.deserialize().map(|r| r.unwrap()).collect()
}

fn write_prices(path: &Path, returns: &[f64]) {
    let mut s = String::from("Date,Adj Close\n");
    let mut price = 100.0;
    let start = 730_000; // days since 0001-01-01, only used for distinct ordered dates
    s.push_str(&format!("{},{price}\n", date(start)));
    for (i, r) in returns.iter().enumerate() {
        price *= (r / 100.0f64).exp();
        s.push_str(&format!("{},{price}\n", date(start + 1 + i as i64)));
    }
    fs::write(path, s).unwrap();
}

fn date(day: i64) -> String {
    // Civil date from a day count (proleptic Gregorian, epoch 0000-03-01).
    let z = day + 306;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!("{y:04}-{m:02}-{d:02}")
}

fn vg_returns(n: usize, seed: u64) -> Vec<f64> {
    let p = VgParams::new(0.05, -0.1, 1.0, 1.2, 0.8).unwrap();
    p.sample_n(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

#[test]
fn normal_density_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["density", "--family", "normal", "--mu", "-2", "--sigma", "1"]);
    let normal = NormalParams::new(-2.0, 1.0).unwrap();
    let rows = read_table(&dir.path().join("density.csv"));
    assert_eq!(rows.len(), 2048);
    let err = rows.iter().map(|&(x, f)| (f - normal.pdf(x)).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-13, "{err}");
}

#[test]
fn symmetric_vg_density_is_even_about_location() {
    let dir = tempfile::tempdir().unwrap();
    // 4 lattice steps of 20/2048.
    let mu = 0.0390625;
    ok(
        dir.path(),
        &["density", "--family", "vg", "--mu", &mu.to_string(), "--drift", "0", "--alpha", "2", "--theta", "0.6"],
    );
    let rows = read_table(&dir.path().join("density.csv"));
    let centre = rows.iter().position(|r| r.0 == mu).unwrap();
    for k in 1..centre.min(rows.len() - 1 - centre) {
        assert!((rows[centre + k].1 - rows[centre - k].1).abs() < 1e-12, "{k}");
    }
}

#[test]
fn compound_poisson_density_matches_series() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["density", "--family", "cpn", "--mu", "-0.1", "--sigma", "0.25", "--lambda", "16"]);
    let p = CpnParams::new(-0.1, 0.25, 16.0).unwrap();
    let rows = read_table(&dir.path().join("density.csv"));
    let err = rows
        .iter()
        .filter(|r| r.0 != 0.0)
        .map(|&(x, f)| (f - p.pdf_series(x, 1e-15)).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn derivative_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--format", "json", "density", "--family", "vg", "--derivatives", "2"]);
    let count = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(count, 21);
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d2_sigma_theta.json")).unwrap()).unwrap();
    assert_eq!(table["values"].as_array().unwrap().len(), 2048);
}

#[test]
fn moment_fit_from_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    fs::write(&summary, r#"{"n": 2755, "mean": 0.0541, "variance": 0.9487, "skewness": -0.4687, "kurtosis": 6.6853}"#)
        .unwrap();
    ok(dir.path(), &["fit", "--summary", summary.to_str().unwrap(), "--method", "moments"]);
    let mut rdr = csv::Reader::from_path(dir.path().join("fits.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let svg = rows.iter().find(|r| &r[1] == "svg").unwrap();
    let get = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    assert!((get(svg, 3) - 0.0541).abs() < 5e-4);
    assert!((get(svg, 6) - 0.8140).abs() < 5e-4);
    assert!((get(svg, 7) - 1.1654).abs() < 5e-4);
    let avg = rows.iter().find(|r| &r[1] == "avg").unwrap();
    assert!((get(avg, 4) + 0.1399).abs() < 5e-4);
}

#[test]
fn moments_init_equals_explicit_init() {
    let dir = tempfile::tempdir().unwrap();
    let returns = dir.path().join("returns.csv");
    let mut s = String::from("return\n");
    for r in vg_returns(600, 3) {
        s.push_str(&format!("{r}\n"));
    }
    fs::write(&returns, s).unwrap();
    let r = returns.to_str().unwrap();
    ok(dir.path(), &["fit", "--returns", r, "--method", "moments", "--model", "avg"]);
    let mut rdr = csv::Reader::from_path(dir.path().join("fits.csv")).unwrap();
    let row = rdr.records().map(|r| r.unwrap()).find(|r| &r[1] == "avg").unwrap();
    let init = [3, 4, 5, 6, 7].map(|i| row[i].to_string()).join(",");

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["fit", "--returns", r, "--method", "mle", "--model", "avg"];
    ok(&a, &args);
    ok(&b, &[&args[..], &["--init", &init]].concat());
    for f in ["fits.csv", "trace_mle_avg.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn returns_pipeline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = vg_returns(400, 5);
    r[100] = 40.0;
    r[250] = -35.0;
    let prices = dir.path().join("prices.csv");
    write_prices(&prices, &r);
    ok(dir.path(), &["returns", "--prices", prices.to_str().unwrap(), "--outliers", "exclude:2"]);

    let rows: Vec<(String, f64, u8, String)> = csv::Reader::from_path(dir.path().join("returns.csv"))
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(rows.len(), 400);
    assert_eq!(rows.iter().filter(|r| r.2 == 1).count(), 2);
    assert!((rows[100].1 - 40.0).abs() < 1e-9 && rows[100].2 == 1);

    let retained: Vec<f64> = rows.iter().filter(|r| r.2 == 0).map(|r| r.1).collect();
    let m = vgfit_core::sample_moments(&retained).unwrap();
    let summary: Vec<(String, usize, f64, f64, f64, f64, f64)> =
        csv::Reader::from_path(dir.path().join("summary.csv")).unwrap().deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(summary[1].0, "retained");
    assert_eq!(summary[1].1, 398);
    assert!((summary[1].2 - m.mean).abs() < 1e-12 && (summary[1].6 - m.kurtosis).abs() < 1e-9);

    let bins: Vec<(f64, f64, usize)> =
        csv::Reader::from_path(dir.path().join("histogram.csv")).unwrap().deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(bins.iter().map(|b| b.2).sum::<usize>(), 398);
    assert!(bins.iter().all(|b| (b.1 - b.0 - 0.035).abs() < 1e-12));
}

#[test]
fn gof_prefers_the_generating_model() {
    let dir = tempfile::tempdir().unwrap();
    let sample = vg_returns(1500, 9);
    let returns = dir.path().join("returns.csv");
    let mut s = String::from("return\n");
    for r in &sample {
        s.push_str(&format!("{r}\n"));
    }
    fs::write(&returns, s).unwrap();
    let clm = vgfit_core::fit_clm(&sample).unwrap();
    let fits = dir.path().join("fits.json");
    fs::write(
        &fits,
        format!(
            r#"[{{"method":"mle","model":"clm","n":1500,"mu":{},"drift":null,"sigma":{},"alpha":null,"theta":null,
                 "loglik":{},"free_params":2,"iterations":null,"converged":null,"se_mu":null,"se_drift":null,
                 "se_sigma":null,"se_alpha":null,"se_theta":null}},
                {{"method":"truth","model":"avg","n":1500,"mu":0.05,"drift":-0.1,"sigma":1.0,"alpha":1.2,"theta":0.8,
                 "loglik":null,"free_params":5,"iterations":null,"converged":null,"se_mu":null,"se_drift":null,
                 "se_sigma":null,"se_alpha":null,"se_theta":null}}]"#,
            clm.params.mu, clm.params.sigma, clm.loglik
        ),
    )
    .unwrap();
    let args = [
        "--grid-a", "80", "--grid-n", "8192", "gof", "--returns", returns.to_str().unwrap(), "--fits",
        fits.to_str().unwrap(), "--reps", "2000",
    ];
    ok(dir.path(), &args);
    let rows: Vec<(String, String, f64, f64)> =
        csv::Reader::from_path(dir.path().join("gof.csv")).unwrap().deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows[0].1, "clm");
    assert!(rows[0].2 > rows[1].2, "{rows:?}");
    assert!(rows[1].3 > 0.01);
    assert!(dir.path().join("comparison_truth_avg.csv").exists());
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    write_prices(&prices, &vg_returns(300, 11));
    let p = prices.to_str().unwrap();
    for sub in ["a", "b"] {
        let d = dir.path().join(sub);
        ok(&d, &["returns", "--prices", p, "--outliers", "zscore:4"]);
        ok(&d, &["--seed", "3", "ks-null", "--n", "300", "--reps", "1000", "--d-obs", "0.05"]);
    }
    for f in ["returns.csv", "summary.csv", "histogram.csv", "excluded.csv", "ks_null_summary.csv", "ks_null_draws.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| vgfit(d, args).status.code().unwrap();
    assert_eq!(code(&["density", "--family", "normal", "--bogus"]), 2);
    assert_eq!(code(&["density", "--family", "normal", "--sigma", "-1"]), 2);
    assert_eq!(code(&["density", "--family", "normal", "--derivatives", "1"]), 2);
    assert_eq!(code(&["--grid-n", "1000", "density", "--family", "normal"]), 2);
    assert_eq!(code(&["returns", "--prices", "/nonexistent/prices.csv"]), 3);
    let dup = d.join("dup.csv");
    fs::write(&dup, "Date,Adj Close\n2020-01-02,100\n2020-01-02,101\n2020-01-03,102\n").unwrap();
    assert_eq!(code(&["returns", "--prices", dup.to_str().unwrap()]), 3);
    let flat = d.join("flat.csv");
    fs::write(&flat, "return\n0.1\n-0.1\n0.1\n-0.1\n").unwrap();
    assert_eq!(code(&["fit", "--returns", flat.to_str().unwrap(), "--method", "moments"]), 4);
    assert_eq!(code(&["ks-null", "--n", "10", "--reps", "5"]), 2);
}

#[test]
fn every_subcommand_documents_its_flags() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, flags) in [
        ("density", &["--family", "--derivatives", "--lambda"][..]),
        ("fit", &["--returns", "--summary", "--init", "--method", "--model"]),
        ("gof", &["--returns", "--fits", "--reps", "--lattice-step"]),
        ("returns", &["--prices", "--outliers", "--bin-width", "--scale"]),
        ("ks-null", &["--n", "--reps", "--d-obs"]),
    ] {
        let help = ok(dir.path(), &[sub, "--help"]);
        for f in flags.iter().chain(&["--grid-a", "--grid-n", "--seed", "--format", "--out-dir"]) {
            assert!(help.contains(f), "{sub} help lacks {f}");
        }
    }
}

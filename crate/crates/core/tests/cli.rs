use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regime_surrogate::cli::commands::{cmd_estimate, cmd_test, cmd_tstar, prepare_series, TestOptions};
use regime_surrogate::cli::RunConfig;
use regime_surrogate::regimes::{FamilyKind, UniRegimeParams};
use regime_surrogate::simulate::{simulate_gbm, SeedSpec};
use regime_surrogate::timeseries::PriceSeries;
use regime_surrogate::volatility::Side;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regime-surrogate"))
        .args(args)
        .output()
        .unwrap()
}

fn write_prices(dir: &Path, name: &str, prices: &[f64]) -> PathBuf {
    let p = dir.join(name);
    let body: String = prices.iter().map(|x| format!("{x}\n")).collect();
    fs::write(&p, format!("price\n{body}")).unwrap();
    p
}

fn simulate(dir: &Path, seed: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["--out-dir", dir.to_str().unwrap(), "--seed", seed, "simulate", "--output", "data.csv"];
    args.extend_from_slice(extra);
    let o = bin(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("data.csv")
}

fn small_config() -> RunConfig {
    RunConfig {
        replicates: 20,
        holding_days: vec![3.0],
        percents_plus: Some(vec![10]),
        percents_minus: Some(vec![90]),
        shapes: vec![1.0, 2.0],
        workers: 2,
        ..RunConfig::default()
    }
}

#[test]
fn gbm_false_flag_rate() {
    // Without jumps the detector flags about p̂ of the returns, so Λ̂ ≈ p̂/Δ.
    let cfg = RunConfig::default();
    let n = 400_000;
    let path = simulate_gbm(&UniRegimeParams { mu: 0.0, beta: 0.1 }, n, cfg.delta, 100.0, SeedSpec::new(5, 1 << 23, 0)).unwrap();
    let s = prepare_series(&cfg, PriceSeries::new(path.prices, cfg.delta, "gbm").unwrap()).unwrap();
    let expected = cfg.p_hat / cfg.delta;
    let count = s.jumps.jump_indices.len() as f64;
    let mean = cfg.p_hat * n as f64;
    assert!((count - mean).abs() <= 4.0 * mean.sqrt(), "{count} flags, expected about {mean}");
    assert!((s.jumps.lambda_hat - expected).abs() <= 0.3 * expected);
    assert!((s.jumps.beta_hat - 0.1).abs() < 0.002);
}

#[test]
fn estimate_constant_and_missing() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = write_prices(tmp.path(), "flat.csv", &[25.0; 60]);
    let out = cmd_estimate(&RunConfig::default(), &[flat]).unwrap();
    let csv = &out.files[0].1;
    assert_eq!(csv.lines().nth(1).unwrap(), "flat,59,0,0,0,0,0,0,0,true");

    let o = bin(&["estimate", "--input", tmp.path().join("nope.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "1\n2\n-3\n").unwrap();
    let o = bin(&["estimate", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn tstar_both_sides_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "11", &[]);
    let copy = tmp.path().join("copy.csv");
    fs::copy(&data, &copy).unwrap();
    let out = cmd_tstar(&RunConfig::default(), &[data, copy]).unwrap();
    let rows: Vec<Vec<String>> = out.files[0]
        .1
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r[3].parse::<usize>().unwrap() > 0);
        assert!(r[4..].iter().all(|x| x.parse::<f64>().unwrap().is_finite()));
    }
    assert_eq!(rows[0][1..], rows[2][1..]);
    assert_eq!(rows[1][1..], rows[3][1..]);

    let flat = write_prices(tmp.path(), "flat.csv", &[25.0; 300]);
    let o = bin(&["tstar", "--input", flat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient durations"));
}

#[test]
fn uni_family_rejects_two_regime_data() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "12", &["--sigma1", "0.03", "--sigma2", "0.12"]);
    let mut cfg = small_config();
    cfg.replicates = 100;
    let out = cmd_test(&cfg, &[data], &[FamilyKind::Uni], &[Side::Squeeze], TestOptions::default()).unwrap();
    let alpha = &out.files.iter().find(|f| f.0 == "data_alpha_uni.csv").unwrap().1;
    let last: Vec<&str> = alpha.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "max");
    assert!(last[1].parse::<f64>().unwrap() <= 0.05, "{alpha}");
}

#[test]
fn single_theta_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "13", &[]);
    let out = cmd_test(&small_config(), &[data], &[FamilyKind::Markov], &[Side::Squeeze], TestOptions::default()).unwrap();
    let theta = &out.files.iter().find(|f| f.0 == "data_markov_plus_theta.csv").unwrap().1;
    assert_eq!(theta.lines().count(), 2);
    let alpha = &out.files.iter().find(|f| f.0 == "data_alpha_markov.csv").unwrap().1;
    assert_eq!(alpha.lines().count(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "14", &[]);
    let cfg_file = tmp.path().join("desk.conf");
    fs::write(&cfg_file, "B = 10\nholding_days = 3\npercents_plus = 10\npercents_minus = 90\nshapes = 1, 2\n").unwrap();
    let mut runs = Vec::new();
    for tag in ["a", "b"] {
        let out = tmp.path().join(tag);
        let o = bin(&[
            "--config", cfg_file.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--seed", "3",
            "test", "--input", data.to_str().unwrap(), "--dump-boxplot",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        runs.push((o.stdout, files));
    }
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].1.iter().map(|f| f.0.as_str()).collect();
    assert!(names.contains(&"best_fit.csv"));
    assert!(names.contains(&"data_semimarkov_minus_boxplot.csv"));
    let best = String::from_utf8(runs[0].1.iter().find(|f| f.0 == "best_fit.csv").unwrap().1.clone()).unwrap();
    assert!(best.starts_with("series,LVLP-uni_alpha4,LVLP-markov_alpha4,LVLP-semimarkov_alpha4,HVLP-uni_alpha4"));
}

#[test]
fn configuration_errors_exit_3() {
    let o = bin(&["--set", "p=2", "estimate", "--input", "x.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let o = bin(&["test", "--input", "x.csv", "--family", "garch"]);
    assert_eq!(o.status.code(), Some(3));
    let o = bin(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

use std::path::PathBuf;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use pivotal::linear::{fit_ols, Dataset};
use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivotal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// (theta, density) pairs from confdens CSV output.
fn density_rows(out: &Output) -> Vec<(f64, f64)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

fn read_columns(path: &str, names: &[&str]) -> Vec<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| header.iter().position(|h| h == *n).unwrap())
        .collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            idx.iter().map(|&i| r[i].parse().unwrap()).collect()
        })
        .collect()
}

#[test]
fn normal_fit_matches_the_library() {
    let fit = ok_json(&[
        "fit", &data("fit20x3.csv"), "--model", "normal", "--design", "x1,x2", "--intercept",
    ]);
    let rows = read_columns(&data("fit20x3.csv"), &["y", "x1", "x2"]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0]));
    let x = DMatrix::from_fn(rows.len(), 3, |i, j| if j == 0 { 1.0 } else { rows[i][j] });
    let lib = fit_ols(&Dataset::new(y, x).unwrap()).unwrap();

    assert_eq!(fit["n"], 20);
    assert_eq!(fit["df"], 17);
    for (a, b) in floats(&fit["beta_hat"]).iter().zip(lib.beta_hat.iter()) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((fit["phi_hat_m"].as_f64().unwrap() - lib.phi_hat_m).abs() < 1e-10);
    assert!((fit["residual_ss"].as_f64().unwrap() - lib.residual_ss).abs() < 1e-10);
}

#[test]
fn nonpositive_gamma_response_exits_six() {
    let out = run(&["fit", &data("gamma_zero.csv"), "--model", "gamma", "--design", "x", "--intercept"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn rank_deficient_design_exits_four() {
    let out = run(&["fit", &data("rank_deficient.csv"), "--model", "normal", "--design", "a,b"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["fit", &data("fit20x3.csv")]).status.code(), Some(2));
    let out = run(&[
        "interval", &data("known_mean.csv"), "--model", "gamma-known-mean", "--target", "precision",
        "--method", "skovgaard", "--level", "0.9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("valid combinations"));
    let out = run(&[
        "interval", &data("variance_df10.csv"), "--model", "normal", "--intercept",
        "--target", "variance", "--level", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn noise_free_fit_warns_and_succeeds() {
    let out = run(&["fit", &data("noisefree.csv"), "--model", "normal", "--design", "x", "--intercept"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("warning: degenerate fit"));
    let fit: Value = serde_json::from_slice(&out.stdout).unwrap();
    let beta = floats(&fit["beta_hat"]);
    assert!((beta[0] - 1.0).abs() < 1e-10 && (beta[1] - 2.0).abs() < 1e-10);
    assert!(fit["loglik"].is_null());
}

#[test]
fn known_variance_density_is_standard_normal() {
    // four observations with variance 4: the mean has unit variance
    let out = run(&[
        "confdens", &data("unit_info.csv"), "--model", "normal", "--intercept",
        "--target", "contrast:1", "--known-variance", "4", "--grid", "-5:6:111",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let theta_hat = (0.3 + 1.9 - 0.4 + 1.4) / 4.0;
    for (theta, c) in density_rows(&out) {
        let z: f64 = theta_hat - theta;
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((c - phi).abs() < 1e-6, "{theta}: {c} vs {phi}");
    }
}

#[test]
fn variance_density_mode_matches_grid_search() {
    let y: Vec<f64> = read_columns(&data("variance_df10.csv"), &["y"]).into_iter().map(|r| r[0]).collect();
    assert_eq!(y.len(), 11);
    let mean = y.iter().sum::<f64>() / 11.0;
    let s: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    // c(φ) ∝ φ^{-df/2 - 1} exp(-s/2φ) peaks at s/(df + 2)
    let log_c = |phi: f64| -6.0 * phi.ln() - s / (2.0 * phi);
    let oracle = (1..20_000)
        .map(|i| s / 12.0 * (0.5 + i as f64 / 20_000.0))
        .max_by(|a, b| log_c(*a).total_cmp(&log_c(*b)))
        .unwrap();

    let grid = format!("{}:{}:2001", s / 24.0, s / 8.0);
    let out = run(&[
        "confdens", &data("variance_df10.csv"), "--model", "normal", "--intercept",
        "--target", "variance", "--grid", &grid,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (mode, _) = density_rows(&out)
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let step = (s / 8.0 - s / 24.0) / 2000.0;
    assert!((mode - oracle).abs() <= step, "{mode} vs {oracle}");
}

fn contrast_interval(extra: &[&str]) -> Value {
    let mut args = vec![
        "interval", &data("contrast_df5.csv"), "--model", "normal", "--design", "x", "--intercept",
        "--target", "contrast:0,1",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    args.extend(extra.iter().map(|s| s.to_string()));
    ok_json(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn contrast_interval_at_five_degrees() {
    let fit = ok_json(&["fit", &data("contrast_df5.csv"), "--model", "normal", "--design", "x", "--intercept"]);
    assert_eq!(fit["df"], 5);
    let slope = floats(&fit["beta_hat"])[1];
    let k = fit["xtx_inv"][1][1].as_f64().unwrap();
    let scale = (k * fit["phi_hat_m"].as_f64().unwrap()).sqrt();

    let one = contrast_interval(&["--level", "0.95"]);
    let lower = one["lower"].as_f64().unwrap();
    assert!((lower - (slope - 2.0150484 * scale)).abs() < 1e-6 * scale);
    assert!(one["upper"].is_null());

    let half = contrast_interval(&["--level", "0.5"]);
    assert!((half["lower"].as_f64().unwrap() - slope).abs() < 1e-9 * scale);
    assert!((half["estimate"].as_f64().unwrap() - slope).abs() < 1e-12);

    let two = contrast_interval(&["--level", "0.9", "--sides", "two"]);
    let upper = contrast_interval(&["--level", "0.95", "--bound", "upper"]);
    assert!((two["lower"].as_f64().unwrap() - lower).abs() < 1e-10);
    assert!((two["upper"].as_f64().unwrap() - upper["upper"].as_f64().unwrap()).abs() < 1e-10);
}

#[test]
fn fit_file_round_trip() {
    let path = scratch("known_mean_fit.json");
    let out = run(&["fit", &data("known_mean.csv"), "--model", "gamma-known-mean"]);
    assert!(out.status.success(), "{}", stderr(&out));
    std::fs::write(&path, &out.stdout).unwrap();
    let path = path.to_str().unwrap();

    for method in ["first-order", "fraser"] {
        let from_csv = ok_json(&[
            "interval", &data("known_mean.csv"), "--model", "gamma-known-mean", "--target", "precision",
            "--method", method, "--level", "0.9", "--sides", "two",
        ]);
        let from_fit = ok_json(&[
            "interval", "--from-fit", path, "--target", "precision", "--method", method,
            "--level", "0.9", "--sides", "two",
        ]);
        for end in ["lower", "upper", "estimate"] {
            let (a, b) = (from_csv[end].as_f64().unwrap(), from_fit[end].as_f64().unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{method} {end}: {a} vs {b}");
        }
    }
    let out = run(&["interval", "--from-fit", path, "--model", "normal", "--target", "precision", "--level", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coverage_is_independent_of_job_count() {
    let file = scratch("small.toml");
    let text = std::fs::read_to_string(scenario("normal_exact.toml"))
        .unwrap()
        .replace("replications = 10000", "replications = 400");
    std::fs::write(&file, text).unwrap();
    let mut csvs = Vec::new();
    for jobs in ["1", "8"] {
        let prefix = scratch(&format!("small_{jobs}"));
        let out = run(&[
            "coverage", file.to_str().unwrap(), "--out", prefix.to_str().unwrap(), "--jobs", jobs,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let json: Value =
            serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
        assert_eq!(json["schema_version"], 1);
        csvs.push(std::fs::read_to_string(prefix.with_extension("csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(csvs[0].lines().count() > 1);
}

#[test]
fn unknown_method_in_scenario_is_a_schema_error() {
    let file = scratch("bad.toml");
    let text = std::fs::read_to_string(scenario("normal_exact.toml"))
        .unwrap()
        .replace("\"contrast_t\"", "\"contrast_z\"");
    std::fs::write(&file, text).unwrap();
    let out = run(&["coverage", file.to_str().unwrap(), "--out", scratch("bad").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("contrast_z"), "{}", stderr(&out));
}

#[test]
fn narrow_grid_warns_about_mass() {
    let out = run(&[
        "confdens", &data("known_mean.csv"), "--model", "gamma-known-mean", "--target", "precision",
        "--grid", "0.5:0.6:11", "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("does not span the confidence mass"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(report["points"].as_array().unwrap().len(), 11);
}

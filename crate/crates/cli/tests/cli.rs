//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inar-outliers"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn simulate_to(path: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--alpha", "0.5", "--innov", "poisson:1", "--n", "400", "--seed", "7"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn moments_prints_hand_values() {
    let v = json(&run(&["moments", "--alpha", "0.5", "--innov", "poisson:1"]));
    assert_eq!(v["m1"], 2.0);
    assert_eq!(v["m2"], 6.0);
    assert_eq!(v["m3"], 22.0);
    assert!((v["sigma2_alpha"].as_f64().unwrap() - 11.5 / 36.0).abs() < 1e-15);
    assert_eq!(v["b_mat"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_deterministic_and_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, j) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("a.json"));
    simulate_to(&a, &["--outlier", "additive:s=50:theta=10"]);
    simulate_to(&b, &["--outlier", "additive:s=50:theta=10"]);
    simulate_to(&j, &["--outlier", "additive:s=50:theta=10", "--format", "json"]);
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());
    assert!(csv.starts_with("y\n"));
    let from_json: Vec<u64> = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    let from_csv: Vec<u64> = csv.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(from_csv, from_json);
    assert_eq!(from_csv.len(), 401);
}

#[test]
fn simulate_then_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.csv");
    simulate_to(&y, &["--outlier", "additive:s=50:theta=10"]);
    let p = y.to_str().unwrap();
    let v = json(&run(&["estimate", "--in", p, "--scenario", "additive", "--s1", "50", "--mu", "1.0"]));
    assert_eq!(v["tag"], "ADD1");
    assert!(v["alpha_hat"].as_f64().unwrap().is_finite());
    assert!(v["theta_hat"][0].as_f64().unwrap().is_finite());
    assert!(v.get("mu_hat").is_none());
    let poly = json(&run(&[
        "estimate", "--in", p, "--scenario", "additive", "--s1", "50", "--mu", "1.0", "--method", "poly",
    ]));
    assert!((poly["alpha_hat"].as_f64().unwrap() - v["alpha_hat"].as_f64().unwrap()).abs() < 1e-8);

    let j = dir.path().join("y.json");
    simulate_to(&j, &["--outlier", "innovational:s=40:theta=8,s=120:theta=6", "--format", "json"]);
    let v = json(&run(&[
        "estimate", "--in", j.to_str().unwrap(), "--scenario", "innovational", "--s1", "40", "--s2", "120",
    ]));
    assert_eq!(v["tag"], "INN2M");
    assert!(v["mu_hat"].as_f64().unwrap().is_finite());
    let v = json(&run(&["estimate", "--in", p]));
    assert!(v["tag"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "y\n1\n2\n3\n4\n5\n").unwrap();
    let p = short.to_str().unwrap();
    let out = run(&["estimate", "--in", p, "--scenario", "additive", "--s1", "3", "--s2", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too short"));
    let out = run(&["moments", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let zeros = dir.path().join("zeros.csv");
    std::fs::write(&zeros, "0\n0\n4\n0\n0\n").unwrap();
    let out = run(&["estimate", "--in", zeros.to_str().unwrap(), "--scenario", "innovational", "--s1", "3", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&[
        "mc", "--alpha", "0.5", "--innov", "poisson:1", "--outliers", "additive:s=5:theta=4", "--n-values", "40",
        "--replications", "50", "--checks", "conditional_clt", "--set", "ks_max = 0.0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stderr.starts_with(b"error: campaign failed"));
}

#[test]
fn mc_from_config_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, rec, sum) = (dir.path().join("c.cfg"), dir.path().join("r.csv"), dir.path().join("s.json"));
    std::fs::write(
        &cfg,
        "alpha = 0.5\ninnov = poisson:1\noutliers = innovational:s=10:theta=5\nmu_known = true\n\
         n_values = 300\nreplications = 100\nmaster_seed = 1\nchecks = consistency, decomposition\n",
    )
    .unwrap();
    let out = run(&[
        "mc", "--config", cfg.to_str().unwrap(), "--records", rec.to_str().unwrap(), "--summary",
        sum.to_str().unwrap(), "--workers", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(&rec).unwrap();
    assert!(records.starts_with("n,rep,scenario,alpha_hat,mu_hat,theta_hat_1,theta_hat_2,limit_1,limit_2"));
    assert_eq!(records.lines().count(), 101);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sum).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["scenario"], "INN1");
}

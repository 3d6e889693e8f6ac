use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scpw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scpw"))
        .args(args)
        .env_remove("SCPW_LOG")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = scpw(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fails_with(args: &[&str], code: i32) -> Value {
    let out = scpw(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    let last = err.lines().last().expect("error line");
    serde_json::from_str(last).expect("stderr ends with error JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn threshold_bimodal() {
    let r = ok_json(&["threshold", "--moments", "4,17,76", "--delta", "0.2,0.5"]);
    assert!((f(&r["delta_c"]) - 4.0 / 13.0).abs() < 1e-15);
    assert_eq!(f(&r["b"]), 21.125);
    assert!((f(&r["a"]) + 46.0).abs() < 1e-12);
    let eigs = r["eigenvalues_at"].as_array().unwrap();
    assert_eq!(eigs.len(), 2);
    assert!(f(&eigs[0]["eigs"][0]) < 0.0 && f(&eigs[1]["eigs"][0]) > 0.0);
}

#[test]
fn threshold_regular_network_warns() {
    let r = ok_json(&["threshold", "--moments", "2,4,8"]);
    assert_eq!((f(&r["delta_c"]), f(&r["a"]), f(&r["b"])), (1.0, -4.0, 2.0));
    assert!(r["warnings"][0].as_str().unwrap().contains("degenerate"));
}

#[test]
fn infeasible_moments_exit_two() {
    let e = fails_with(&["threshold", "--moments", "4,10,76"], 2);
    assert_eq!(e["error"], "infeasible_moments");
    assert!(e["message"].as_str().unwrap().contains("Jensen"));
    let e = fails_with(&["threshold", "--moments", "4,17,70"], 2);
    assert!(e["message"].as_str().unwrap().contains("Cauchy"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fails_with(&["threshold"], 2)["error"], "usage");
    assert_eq!(fails_with(&["threshold", "--moments", "4,17,76", "--poisson", "3"], 2)["error"], "usage");
    assert_eq!(fails_with(&["threshold", "--moments", "4,17"], 2)["error"], "usage");
    let e = fails_with(&["threshold", "--degrees", "/nonexistent/degrees.txt"], 2);
    assert_eq!(e["error"], "invalid_parameter");
}

#[test]
fn degree_file_matches_bimodal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deg.txt");
    let mut s = String::new();
    for _ in 0..5 {
        s.push_str("3\n5\n");
    }
    std::fs::write(&path, s).unwrap();
    let a = ok_json(&["threshold", "--degrees", path.to_str().unwrap()]);
    let b = ok_json(&["threshold", "--bimodal", "3,5,5,5"]);
    assert_eq!(a, b);
}

#[test]
fn equilibrium_methods_agree() {
    let newton = ok_json(&["equilibrium", "--moments", "4,17,76", "--delta", "0.5"]);
    assert_eq!(newton["method"], "newton");
    assert!(newton["residual_P"].is_number() && newton["residual_Q"].is_number());
    let ode = ok_json(&["equilibrium", "--moments", "4,17,76", "--delta", "0.5", "--method", "ode"]);
    assert!((f(&newton["w_star"]) - f(&ode["w_star"])).abs() < 1e-6);
    for m in ["near", "far"] {
        let r = ok_json(&["equilibrium", "--moments", "4,17,76", "--delta", "0.5", "--method", m]);
        assert!(f(&r["w_star"]) > 0.0);
    }
    assert_eq!(
        fails_with(&["equilibrium", "--moments", "4,17,76", "--delta", "0.5", "--method", "secant"], 2)["error"],
        "unknown_strategy"
    );
    assert_eq!(
        fails_with(&["equilibrium", "--moments", "4,17,76", "--delta", "0.2"], 2)["error"],
        "no_endemic_equilibrium"
    );
}

#[test]
fn bifurcation_csv() {
    let out = scpw(&["bifurcation", "--poisson", "10", "--delta", "0.3,0.05,0.1,0.2"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("delta,eta,eps,w_ode,w_poly,w_near,w_far"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let deltas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(deltas, vec![0.05, 0.1, 0.2, 0.3]);
    // At and below the threshold the curve is zero and the expansions are blank.
    for r in &rows[..2] {
        assert_eq!((r[3], r[4], r[5], r[6]), ("0", "0", "", ""));
    }
    let w: Vec<f64> = rows[2..].iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(w[0] > 0.0 && w[1] > w[0]);
    assert_eq!(fails_with(&["bifurcation", "--poisson", "10"], 2)["error"], "invalid_parameter");
    assert_eq!(
        fails_with(&["bifurcation", "--poisson", "10", "--delta-min", "0.1", "--delta-max", "0.2", "--steps", "1"], 2)["error"],
        "invalid_parameter"
    );
}

#[test]
fn sensitivity_default_writes_six_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = scpw(&["sensitivity", "--resolution", "12", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"sensitivity_far_k3_400.csv".to_string()));
    let text = std::fs::read_to_string(dir.path().join("sensitivity_near_k3_20.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("k1,k2,k3,regime,delta,feasible,d_k1,d_k2,d_k3"));
    assert_eq!(text.lines().count(), 1 + 12 * 12);
    assert!(text.contains(",false,,,"));
}

#[test]
fn sensitivity_single_cell() {
    let r = ok_json(&["sensitivity", "--at", "4,17,76", "--regime", "near"]);
    assert!((f(&r["d_k1"]) + 17.0 / 46.0).abs() < 1e-15);
    assert!((f(&r["d_k2"]) - 4.0 / 46.0).abs() < 1e-15);
    assert_eq!(f(&r["d_k3"]), 0.0);
    let r = ok_json(&["sensitivity", "--at", "4,17,76", "--regime", "far", "--delta", "1.5"]);
    assert!((f(&r["d_k3"]) - 1.0 / 225.0 / 1.5).abs() < 1e-15);
    let both = ok_json(&["sensitivity", "--at", "4,10,76"]);
    for c in both.as_array().unwrap() {
        assert_eq!(c["feasible"], false);
        assert!(c["d_k1"].is_null());
    }
}

#[test]
fn simulate_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = scpw(&[
        "simulate", "--moments", "4,17,76", "--delta", "0.5", "--t-end", "50", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("T,v,w,x,y,z"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 50.0);
    assert!((last[1] + last[2] - 1.0).abs() < 1e-9);
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn netsim_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    let series = dir.path().join("series.csv");
    let args = [
        "netsim",
        "--poisson",
        "6",
        "--nodes",
        "300",
        "--delta",
        "0.5",
        "--t-max",
        "20",
        "--seed",
        "4",
        "--edges",
        edges.to_str().unwrap(),
        "--series",
        series.to_str().unwrap(),
    ];
    let a = ok_json(&args);
    let (e1, s1) = (read(&edges), read(&series));
    let b = ok_json(&args);
    assert_eq!(a, b);
    assert_eq!((e1, s1), (read(&edges), read(&series)));
    assert_eq!(a["n"], 300);
    assert_eq!(read(&edges).lines().count() as u64, a["edges"].as_u64().unwrap());
    assert!(read(&series).starts_with("t,prevalence\n0,"));
    assert_eq!(fails_with(&["netsim", "--moments", "4,17,76", "--delta", "0.5"], 2)["error"], "invalid_parameter");
}

#[test]
fn validate_is_deterministic() {
    let args = ["validate", "--poisson", "6", "--nodes", "300", "--delta", "0.5", "--runs", "4", "--t-max", "20"];
    let a = scpw(&args);
    let b = scpw(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["records"].as_array().unwrap().len(), 4);
    assert!((f(&r["gap"]) - (f(&r["ensemble_mean"]) - f(&r["w_star"]))).abs() < 1e-15);
}

#[test]
fn validate_below_threshold_dies_out() {
    let r = ok_json(&[
        "validate", "--bimodal", "3,200,5,200", "--delta-factor", "0.5", "--runs", "10", "--t-max", "100",
    ]);
    assert_eq!(f(&r["w_star"]), 0.0);
    assert_eq!(r["extinct_count"], 10);
}

#[test]
fn log_level_from_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_scpw"))
        .args(["equilibrium", "--moments", "4,17,76", "--delta", "0.5"])
        .env("SCPW_LOG", "info")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("solving with newton"));
    assert!(scpw(&["equilibrium", "--moments", "4,17,76", "--delta", "0.5"]).stderr.is_empty());
}

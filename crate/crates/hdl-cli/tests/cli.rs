//! End-to-end checks of the batch front-end: output schemas, determinism,
//! and exit-status contracts.

use std::process::Command;

fn hdl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdl"))
}

#[test]
fn eval_single_value() {
    let out = hdl()
        .args(["eval", "--fn", "x1", "--s", "1", "--a", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "5.0000000000000000e-1");
}

#[test]
fn threshold_printed() {
    let out = hdl().args(["potentials", "--find-t"]).output().unwrap();
    assert!(out.status.success());
    let value: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((value - 0.866876).abs() < 1e-5);
}

#[test]
fn potentials_csv_schema_and_determinism() {
    let args = [
        "potentials",
        "--which",
        "w1",
        "--grid-min",
        "1e-4",
        "--grid-max",
        "10",
        "--ppd",
        "64",
    ];
    let a = hdl().args(args).output().unwrap();
    let b = hdl().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "tabulation must be byte-identical");
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,W,channel_plus,channel_minus,margin_plus,margin_minus"
    );
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 6);
}

#[test]
fn verify_passes_and_reports() {
    let out = hdl()
        .args(["verify", "--ineq", "r6", "--nu", "0.5", "--corpus", "25"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let records: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rec = &records[0];
    assert_eq!(rec["inequality"], "R6");
    assert!(rec["margin_min"].as_f64().unwrap() >= -1e-8);
    assert_eq!(rec["corpus_seed"], 42);
}

#[test]
fn verify_seed_determinism() {
    let args = ["verify", "--ineq", "r1", "--corpus", "30", "--seed", "7"];
    let a = hdl().args(args).output().unwrap();
    let b = hdl().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn strict_tolerance_fails_with_record() {
    // admissibility margins sit at roundoff, so an absurd tolerance trips
    // the exit contract and produces a machine-readable record
    let out = hdl()
        .args(["verify", "--ineq", "m", "--tol", "1e-30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let record: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(record["error"], "contract_violation");
}

#[test]
fn counterexample_schema() {
    let out = hdl()
        .args(["counterexample", "--height", "0.5", "--trials", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("trial,s_start,blowup_radius,max_m\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn full_suite_passes_on_standard_corpus() {
    let out = hdl()
        .args(["verify", "--ineq", "all", "--corpus", "100"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let records: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let names: Vec<&str> = records
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["inequality"].as_str().unwrap())
        .collect();
    for expected in ["hardy", "R3", "R1", "R6", "R8", "M", "channel-dominance"] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
}

#[test]
fn bad_grid_rejected() {
    let out = hdl()
        .args(["eval", "--fn", "winf", "--grid-min", "10", "--grid-max", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

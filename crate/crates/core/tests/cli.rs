use std::path::Path;

use grasstensor::cli::{dispatch, CommandOutcome};
use serde_json::Value;

fn run(args: &[&str]) -> CommandOutcome {
    dispatch(std::iter::once("grasstensor").chain(args.iter().copied()))
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.exit_code, 0, "{args:?}: {}", out.stderr);
    out.stdout
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn tensor_rank_prints_formula_values() {
    assert_eq!(run_ok(&["tensor", "rank", "--k", "3", "--h", "2,2", "--profile", "2,2"]).trim(), "2");
    let tri = run_ok(&["tensor", "rank", "--k", "3", "--h", "2,2,2", "--profile", "1,1,2"]);
    assert_eq!(tri.trim(), "4");
}

#[test]
fn build_recover_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let c = dir.path().join("c.json");
    let t2 = dir.path().join("t2.json");
    run_ok(&["tensor", "build", "--k", "3", "--h", "2,2,2", "--profile", "1,1,2", "--seed", "3", "--out", p(&t)]);
    let tj = json_file(&t);
    assert_eq!(tj["dims"], serde_json::json!([3, 3, 3]));
    run_ok(&["reconstruct", "cameras", "--tensor", p(&t), "--out", p(&c)]);
    assert_eq!(json_file(&c)["cameras"].as_array().unwrap().len(), 3);
    run_ok(&["tensor", "build", "--cameras", p(&c), "--profile", "1,1,2", "--out", p(&t2)]);
    let d: f64 = run_ok(&["tensor", "distance", "--a", p(&t), "--b", p(&t2)]).trim().parse().unwrap();
    assert!(d < 1e-8, "distance {d}");
}

#[test]
fn seeded_output_is_reproducible() {
    let a = run_ok(&["critical", "sample", "--k", "3", "--h", "2,2", "--count", "4", "--seed", "8"]);
    let b = run_ok(&["critical", "sample", "--k", "3", "--h", "2,2", "--count", "4", "--seed", "8"]);
    assert_eq!(a, b);
    let c = run_ok(&["critical", "sample", "--k", "3", "--h", "2,2", "--count", "4", "--seed", "9"]);
    assert_ne!(a, c);
}

#[test]
fn sampled_points_are_critical_for_the_saved_problem() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("prob.json");
    let pts = dir.path().join("pts.json");
    run_ok(&["critical", "build", "--k", "3", "--h", "2,2", "--seed", "2", "--out", p(&prob)]);
    let built = json_file(&prob);
    assert_eq!(built["m_shape"], serde_json::json!([6, 6]));
    run_ok(&["critical", "sample", "--problem", p(&prob), "--count", "5", "--out", p(&pts)]);
    let check: Value = serde_json::from_str(&run_ok(&["critical", "check", "--problem", p(&prob), "--points", p(&pts)])).unwrap();
    let text = check.to_string();
    assert!(!text.contains("false"), "{text}");
}

#[test]
fn expected_degree_and_bounds() {
    assert_eq!(run_ok(&["critical", "degree", "--n", "3", "--k", "4", "--h", "2,2,2"]).trim(), "6");
    let out = run(&["critical", "dim", "--n", "3", "--k", "9", "--h", "1,1,1"]);
    assert_eq!(out.exit_code, 1);
    assert!(out.stderr.starts_with("BoundViolated:"), "{}", out.stderr);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["tensor", "distance", "--a", "/nonexistent/a.json", "--b", "/nonexistent/b.json"]);
    assert_eq!(out.exit_code, 2);
    assert!(out.stderr.starts_with("UsageError"), "{}", out.stderr);
    assert_eq!(run(&["tensor", "bogus"]).exit_code, 2);
    assert_eq!(run(&["tensor", "build", "--profile", "2,2"]).exit_code, 2);
}

#[test]
fn instability_run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.csv");
    let svg = dir.path().join("far.svg");
    run_ok(&[
        "instability", "run", "--k", "3", "--h", "2,2", "--trials", "4", "--points", "40", "--sigmas", "1e-3,1e-1",
        "--out", p(&rec),
    ]);
    let text = std::fs::read_to_string(&rec).unwrap();
    assert!(text.starts_with("# far_threshold=0.1\nsigma,trial,tensor_distance,verdict\n"));
    assert_eq!(text.lines().count(), 2 + 8);
    let summary = run_ok(&["instability", "summarize", "--records", p(&rec), "--svg", p(&svg)]);
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[1], "sigma,n,far_fraction,mean_distance");
    assert!(rows[2].starts_with("0.001,4,"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn embedding_reports_the_static_point() {
    let out = run_ok(&[
        "embed", "motion", "--model", "parallel", "--direction", "0,0,1", "--point", "1,2,3", "--speed", "-0.5",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["embedded_point"], serde_json::json!([1.0, 2.0, 3.0, 1.0, -0.5]));
    assert_eq!(v["point_at_time"], serde_json::json!([1.0, 2.0, 3.0, 1.0]));
}

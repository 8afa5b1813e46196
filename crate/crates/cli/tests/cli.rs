use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const THIRD: &str = "[0.3333333333333333, 0.3333333333333333, 0.33333333333333337]";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lp-limitlaw"))
}

fn line_problem(dir: &Path, name: &str, p: f64) -> PathBuf {
    let path = dir.join(name);
    let text = format!(r#"{{"points_x": [0, 1, 2], "points_y": [0, 1, 2], "p": {p}, "r": {THIRD}, "s": {THIRD}}}"#);
    fs::write(&path, text).unwrap();
    path
}

fn run(dir: &Path, out: &str, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir.join(out)).args(args).output().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn analyze_three_point_line_has_four_optimal_bases() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let o = run(tmp.path(), "out", &["analyze", problem.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(tmp.path().join("out/analysis.json"));
    assert_eq!(a["K"], 4);
    assert_eq!(a["partition"]["pos"], serde_json::json!([0, 4, 8]));
    assert_eq!(a["partition"]["tz"], serde_json::json!([2, 6]));
    assert_eq!(a["partition"]["dz"], serde_json::json!([1, 3, 5, 7]));
    assert_eq!(a["cones"].as_array().unwrap().len(), 4);
    // Timestamps live in manifest.json only.
    assert!(a["manifest"].get("started").is_none());
    let m = json(tmp.path().join("out/manifest.json"));
    assert!(m["started"].is_string() && m["finished"].is_string());
    assert_eq!(m["config_digest"], a["manifest"]["config_digest"]);
}

#[test]
fn analyze_square_lp() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("sq.json");
    fs::write(&path, r#"{"A": [[2, 1], [1, 3]], "b": [3, 4], "c": [1, 1]}"#).unwrap();
    let o = run(tmp.path(), "out", &["analyze", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let a = json(tmp.path().join("out/analysis.json"));
    assert_eq!((a["N"].clone(), a["K"].clone()), (1.into(), 1.into()));
    let flags = &a["assumptions"];
    for key in ["a1", "a2", "a3", "bounded"] {
        assert_eq!(flags[key], true, "{key}");
    }
}

#[test]
fn malformed_and_invalid_inputs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"A\": [[1, 2]").unwrap();
    let o = run(tmp.path(), "out", &["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());

    let ragged = tmp.path().join("ragged.json");
    fs::write(&ragged, r#"{"A": [[1, 2], [1]], "b": [1, 1], "c": [1, 1]}"#).unwrap();
    let o = run(tmp.path(), "out", &["analyze", ragged.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`A`"));

    let o = run(tmp.path(), "out", &["--tol", "bogus=1", "analyze", ragged.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = run(tmp.path(), "out", &["analyze", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn enumeration_cap_exits_3() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let o = run(tmp.path(), "out", &["--tol", "enumeration_cap=10", "analyze", problem.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn limit_sample_zero_samples_writes_header_only() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let o = run(tmp.path(), "out", &["limit-sample", problem.to_str().unwrap(), "--samples", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/limit_samples.csv")).unwrap();
    assert_eq!(csv, "pi_0_0,pi_0_1,pi_0_2,pi_1_0,pi_1_1,pi_1_2,pi_2_0,pi_2_1,pi_2_2\n");
}

#[test]
fn limit_sample_is_reproducible_and_occupancy_sums_to_one() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let p = problem.to_str().unwrap();
    let args = ["--seed", "11", "limit-sample", p, "--samples", "20000", "--mode", "two-sample", "--lambda", "0.5"];
    assert_eq!(code(&run(tmp.path(), "a", &args)), 0);
    let mut threaded = vec!["--threads", "1"];
    threaded.extend_from_slice(&args);
    assert_eq!(code(&run(tmp.path(), "b", &threaded)), 0);
    let a = fs::read(tmp.path().join("a/limit_samples.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/limit_samples.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(tmp.path().join("a/limit_samples.json")).unwrap(),
        fs::read(tmp.path().join("b/limit_samples.json")).unwrap()
    );
    let side = json(tmp.path().join("a/limit_samples.json"));
    let occ: Vec<f64> = side["occupancy"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(occ.len(), 4);
    assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(side["uncovered"], 0);
}

#[test]
fn limit_sample_rejects_non_unique_problem_with_4() {
    let tmp = TempDir::new().unwrap();
    // Shifting mass one step right: 0 -> 1, 1 -> 2 and 0 -> 2, 1 -> 1 both cost 1.
    let path = tmp.path().join("shift.json");
    fs::write(
        &path,
        r#"{"points_x": [0, 1, 2], "points_y": [0, 1, 2], "p": 1, "r": [0.5, 0.5, 0], "s": [0, 0.5, 0.5]}"#,
    )
    .unwrap();
    let o = run(tmp.path(), "out", &["limit-sample", path.to_str().unwrap(), "--samples", "10"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn monte_carlo_single_replicate() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": {"sample_sizes": [10], "replicates": 1, "comparison_samples": 50}}"#).unwrap();
    let o = run(tmp.path(), "out", &["monte-carlo", problem.to_str().unwrap(), cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fl = fs::read_to_string(tmp.path().join("out/fluctuations.csv")).unwrap();
    assert_eq!(fl.lines().count(), 2);
    assert!(fl.starts_with("n,replicate,pi_0_0,"));
    let hd = fs::read_to_string(tmp.path().join("out/hausdorff.csv")).unwrap();
    assert!(hd.starts_with("n,replicate,d_H\n"));
    let report = json(tmp.path().join("out/report.json"));
    assert!(report["manifest"]["config_digest"].is_string());
    assert!(tmp.path().join("out/manifest.json").exists());
}

#[test]
fn monte_carlo_report_has_ks_for_every_coordinate_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": {"sample_sizes": [400], "replicates": 60, "comparison_samples": 200}}"#).unwrap();
    let args = ["--seed", "5", "monte-carlo", problem.to_str().unwrap(), cfg.to_str().unwrap()];
    assert_eq!(code(&run(tmp.path(), "a", &args)), 0);
    assert_eq!(code(&run(tmp.path(), "b", &args)), 0);
    for f in ["fluctuations.csv", "hausdorff.csv", "report.json"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let report = json(tmp.path().join("a/report.json"));
    let ks = report["report"]["comparisons"][0]["ks"].as_array().unwrap();
    assert_eq!(ks.len(), 9);
    assert!(ks.iter().all(|v| v.is_number()));
}

#[test]
fn monte_carlo_warns_on_boundary_marginal() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("zero.json");
    fs::write(
        &path,
        r#"{"points_x": [0, 1, 2], "points_y": [0, 1, 2], "p": 2, "r": [0.5, 0.5, 0.0], "s": [0.2, 0.3, 0.5]}"#,
    )
    .unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment": {"sample_sizes": [20], "replicates": 2, "comparison_samples": 10, "hausdorff": false, "require_interior": true}}"#,
    )
    .unwrap();
    let o = run(tmp.path(), "out", &["monte-carlo", path.to_str().unwrap(), cfg.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning") && err.contains("`r`"), "{err}");
}

#[test]
fn monte_carlo_rejects_unknown_config_fields() {
    let tmp = TempDir::new().unwrap();
    let problem = line_problem(tmp.path(), "p2.json", 2.0);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": {"replicate": 3}}"#).unwrap();
    let o = run(tmp.path(), "out", &["monte-carlo", problem.to_str().unwrap(), cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn monte_carlo_too_many_infeasible_exits_5() {
    let tmp = TempDir::new().unwrap();
    // x2 + x3 = 0 forces x1 = b1, so every supplied rhs is infeasible.
    let path = tmp.path().join("lp.json");
    fs::write(&path, r#"{"A": [[1, -1, 0], [0, 1, 1]], "b": [1, 0], "c": [1, 1, 1]}"#).unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment": {"sample_sizes": [5], "replicates": 10, "hausdorff": false},
            "model": {"kind": "user-samples", "draws": [[-1, 0], [-2, 0]]}}"#,
    )
    .unwrap();
    let o = run(tmp.path(), "out", &["monte-carlo", path.to_str().unwrap(), cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn certify_line_instances() {
    let tmp = TempDir::new().unwrap();
    let p1 = line_problem(tmp.path(), "p1.json", 1.0);
    assert_eq!(code(&run(tmp.path(), "one", &["certify", p1.to_str().unwrap()])), 0);
    let c = json(tmp.path().join("one/certificates.json"));
    assert_eq!(c["dual_summability"]["holds"], false);
    assert_eq!(c["dual_summability"]["witness"]["pairs"], serde_json::json!([[0, 1], [1, 2]]));

    let p2 = line_problem(tmp.path(), "p2.json", 2.0);
    assert_eq!(code(&run(tmp.path(), "two", &["certify", p2.to_str().unwrap()])), 0);
    let c = json(tmp.path().join("two/certificates.json"));
    assert_eq!(c["strict_monge"]["holds"], true);
    assert_eq!(c["uniqueness_implied"], true);
}

#[test]
fn certify_single_point_is_vacuous() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("one.json");
    fs::write(&path, r#"{"cost": [[3.0]], "r": [1.0], "s": [1.0]}"#).unwrap();
    let o = run(tmp.path(), "out", &["certify", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = json(tmp.path().join("out/certificates.json"));
    for key in ["strict_monge", "primal_summability", "dual_summability", "strict_cyclical_monotone_support"] {
        assert_eq!(c[key]["holds"], true, "{key}");
    }
    assert_eq!(c["uniqueness_implied"], true);
}

#[test]
fn certify_large_instance_exits_3() {
    let tmp = TempDir::new().unwrap();
    let n = 8;
    let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
    let w = vec![1.0 / n as f64; n];
    let text = serde_json::json!({"cost": cost, "r": w, "s": w}).to_string();
    let path = tmp.path().join("big.json");
    fs::write(&path, text).unwrap();
    let o = run(tmp.path(), "out", &["certify", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

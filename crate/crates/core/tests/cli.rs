//! End-to-end runs of the `grassnorm` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

struct Run {
    code: i32,
    stdout: String,
    report: Value,
}

fn grassnorm(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_grassnorm")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap(), stdout, report }
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixtures(dir: &Path) -> (PathBuf, PathBuf) {
    let q = write(dir, "I4.json", &json!({"n": 3, "matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}));
    let p = write(dir, "p01.json", &json!({"n": 3, "points": [[1,0,0,0],[0,1,0,0]]}));
    (q, p)
}

#[test]
fn polar_einstein_on_identity_quadric() {
    let dir = tempfile::tempdir().unwrap();
    let (q, p) = fixtures(dir.path());
    let r = grassnorm(&["polar", "--quadric", s(&q), "--subspace", s(&p), "--emit", "einstein"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.report["verdicts"]["is_einstein"], true);
    assert_eq!(r.report["outputs"]["constant"].as_f64(), Some(1.0));
    assert_eq!(r.report["outputs"]["p_star"]["points"], json!([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]));
    assert_eq!(r.report["inputs"].as_object().unwrap().len(), 2);
}

#[test]
fn flatness_residuals_vanish() {
    let r = grassnorm(&["flatness", "--m", "1", "--n", "3"]);
    assert_eq!(r.code, 0);
    for v in r.report["residuals"].as_object().unwrap().values() {
        assert_eq!(v.as_f64(), Some(0.0));
    }
    let r = grassnorm(&["flatness", "--m", "2", "--n", "5", "--samples", "20", "--seed", "4"]);
    assert_eq!(r.code, 0);
    assert!(r.report["residuals"]["round_trip_max_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn generic_lambda_is_not_homogeneous() {
    let dir = tempfile::tempdir().unwrap();
    let lam = write(
        dir.path(),
        "random.json",
        &json!({"m": 1, "n": 3, "lambda": [[[[0.3,-0.7],[0.9,0.1]],[[-0.2,0.5],[0.4,-0.8]]],
                                           [[[0.6,0.2],[-0.5,0.7]],[[0.1,-0.9],[0.8,0.3]]]]}),
    );
    let r = grassnorm(&["check", "homogeneity", "--lambda", s(&lam), "--tol", "1e-9"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.report["verdicts"]["is_homogeneous"], false);
    assert!(r.report["residuals"]["homogeneity_residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn polar_lambda_file_passes_homogeneity_and_feeds_metric() {
    let dir = tempfile::tempdir().unwrap();
    let (q, p) = fixtures(dir.path());
    let est = grassnorm(&["estimate-lambda", "--map", &format!("polar:{}", s(&q)), "--subspace", s(&p)]);
    assert_eq!(est.code, 0);
    assert_eq!(est.report["outputs"]["rank"], 4);
    let lam = write(dir.path(), "lam.json", &est.report["outputs"]);

    let h = grassnorm(&["check", "homogeneity", "--lambda", s(&lam), "--tol", "1e-9"]);
    assert_eq!(h.code, 0, "{}", h.stdout);
    let m = grassnorm(&["metric", "--lambda", s(&lam)]);
    assert_eq!(m.report["outputs"]["metric_rank"], 4);
    assert_eq!(m.report["outputs"]["isotropic_dimension"], 0);
    let r = grassnorm(&["ricci", "--lambda", s(&lam)]);
    assert!(r.report["residuals"]["contraction_mismatch"].as_f64().unwrap() <= 1e-13);
    let c = grassnorm(&["curvature", "--lambda", s(&lam)]);
    assert_eq!(c.code, 0);
    // [i][β][γ][ε][α][j][k][l] with b = a = 2.
    let shape: Vec<usize> = {
        let mut v = &c.report["outputs"]["curvature"];
        let mut dims = Vec::new();
        while let Some(arr) = v.as_array() {
            dims.push(arr.len());
            v = &arr[0];
        }
        dims
    };
    assert_eq!(shape, vec![2; 8]);
}

#[test]
fn covariant_constancy_of_the_polar_map() {
    let dir = tempfile::tempdir().unwrap();
    let (q, p) = fixtures(dir.path());
    let d = write(dir.path(), "d.json", &json!({"m": 1, "n": 3, "direction": [[0.5, -1.0], [0.25, 0.75]]}));
    let map = format!("polar:{}", s(&q));
    let args = ["check", "covariant-constancy", "--map", &map, "--subspace", s(&p), "--direction", s(&d)];
    let mut loose: Vec<&str> = args.to_vec();
    loose.extend(["--eps", "1e-4", "--tol", "1e-6"]);
    let r = grassnorm(&loose);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.report["residuals"]["nabla_max_abs"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn cross_ratio_of_identical_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write(
        dir.path(),
        "pair.json",
        &json!({"p": {"n": 3, "points": [[1,0,0,0],[0,1,0,0]]}, "p_star": {"n": 3, "points": [[0,0,1,0],[0,0,0,1]]}}),
    );
    let r = grassnorm(&["cross-ratio", "--pair-a", s(&pair), "--pair-b", s(&pair), "--log-distance"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.report["outputs"]["trace"].as_f64(), Some(2.0));
    assert_eq!(r.report["outputs"]["log_distance"].as_f64(), Some(0.0));
    let r = grassnorm(&["cross-ratio", "--pair-a", s(&pair), "--pair-b", s(&pair)]);
    assert!(r.report["outputs"]["log_distance"].is_null());
}

#[test]
fn project_and_unproject_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ps = write(dir.path(), "ps.json", &json!({"n": 3, "points": [[0,0,1,0],[0,0,0,1]]}));
    let p = write(dir.path(), "p.json", &json!({"n": 3, "points": [[1,0,0.5,2],[0,1,-1,0.25]]}));
    let proj = grassnorm(&["project", "--subspace", s(&p), "--normalizer", s(&ps)]);
    assert_eq!(proj.code, 0);
    assert_eq!(proj.report["outputs"]["B"], json!([[0.5, -1.0], [2.0, 0.25]]));
    let chart = write(dir.path(), "b.json", &proj.report["outputs"]);
    let back = grassnorm(&["unproject", "--chart", s(&chart), "--normalizer", s(&ps)]);
    assert_eq!(back.code, 0);
    assert_eq!(back.report["outputs"]["points"], json!([[1.0, 0.0, 0.5, 2.0], [0.0, 1.0, -1.0, 0.25]]));
}

#[test]
fn sampled_einstein_check() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.json", &json!({"n": 4, "matrix": [[1,0,0,0,0],[0,1,0,0,0],[0,0,1,0,0],[0,0,0,1,0],[0,0,0,0,-1]]}));
    let r = grassnorm(&["einstein", "--quadric", s(&q), "--m", "1", "--samples", "5", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    for c in r.report["outputs"]["constants"].as_array().unwrap() {
        assert!((c.as_f64().unwrap() - 1.5).abs() <= 1e-9);
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (q, p) = fixtures(dir.path());
    let args = ["polar", "--quadric", s(&q), "--subspace", s(&p), "--emit", "curvature"];
    assert_eq!(grassnorm(&args).stdout, grassnorm(&args).stdout);
    let args = ["einstein", "--quadric", s(&q), "--m", "1", "--seed", "9"];
    assert_eq!(grassnorm(&args).stdout, grassnorm(&args).stdout);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_q = write(dir.path(), "bad.json", &json!({"n": 1, "matrix": [[1, 2], [0, 1]]}));
    let p = write(dir.path(), "p.json", &json!({"n": 1, "points": [[1, 0]]}));
    let r = grassnorm(&["polar", "--quadric", s(&bad_q), "--subspace", s(&p), "--emit", "lambda"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.is_empty());
    let r = grassnorm(&["metric", "--lambda", s(&dir.path().join("missing.json"))]);
    assert_eq!(r.code, 2);
    let r = grassnorm(&["polar", "--emit", "everything"]);
    assert_eq!(r.code, 2);
}

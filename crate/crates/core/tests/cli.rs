use std::path::{Path, PathBuf};

use finsler_core::cli::{run_with_config, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

fn spec(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name).display().to_string()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str], config: Option<PathBuf>) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("finsler").chain(args.iter().copied());
    let code = run_with_config(argv, config, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finsler-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_reports_riemannian_flags() {
    let s = spec("conformal.json");
    let r = run(&["analyze", "--spec", &s, "--x", "0.2,0.1", "--y", "1,2"], None);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["classification"]["riemannian"]["holds"], true);
    assert_eq!(v["classification"]["berwald"]["holds"], true);
}

#[test]
fn witness_is_not_landsberg() {
    let s = spec("randers_witness.json");
    let r = run(&["analyze", "--spec", &s, "--x", "0.5,1", "--y", "1,0.5"], None);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["classification"]["riemannian"]["holds"], false);
    assert_eq!(v["classification"]["landsberg"]["holds"], false);
}

#[test]
fn missing_spec_is_an_input_error() {
    let r = run(&["analyze", "--spec", "/nonexistent/metric.json"], None);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.err.contains("file not found: /nonexistent/metric.json"), "{}", r.err);
    assert!(r.out.is_empty());
}

#[test]
fn malformed_arguments_are_input_errors() {
    let s = spec("euclidean2.json");
    assert_eq!(run(&["analyze", "--spec", &s, "--x", "0,0,0"], None).code, EXIT_INPUT);
    assert_eq!(run(&["frobnicate", "--spec", &s], None).code, EXIT_INPUT);
    assert_eq!(run(&["average", "--spec", &s, "--grid", "2"], None).code, EXIT_INPUT);
    assert_eq!(run(&["average", "--spec", &s, "--workers", "0"], None).code, EXIT_INPUT);
    assert_eq!(run(&["average", "--spec", &s, "--format", "csv"], None).code, EXIT_INPUT);
    assert_eq!(run(&["transport", "--spec", &s], None).code, EXIT_INPUT);
}

#[test]
fn invalid_spec_is_an_input_error() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"schema_version": 1, "family": "dsl", "dimension": 2, "coefficients": {"F": "sqrt(y1^2 +"}}"#).unwrap();
    let r = run(&["analyze", "--spec", path.to_str().unwrap()], None);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.err.starts_with("error: ") && r.err.contains("in `F`"), "{}", r.err);
}

#[test]
fn unconverged_homotopy_exits_numerical_with_report() {
    let s = spec("randers_witness.json");
    let r = run(
        &["homotopy", "--spec", &s, "--x", "0.5,1", "--grid", "64", "--variant", "independent", "--max-iter", "2"],
        None,
    );
    assert_eq!(r.code, EXIT_NUMERICAL, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["invariance"]["all_converged"], false);
    assert!(r.err.contains("did not converge"));
}

#[test]
fn config_fills_unset_flags_and_flags_win() {
    let config = scratch("config.json");
    std::fs::write(&config, r#"{"x": [0.5, 1.0], "grid": 64, "t_list": [0.0, 1.0]}"#).unwrap();
    let s = spec("randers_witness.json");
    let from_config = run(&["homotopy", "--spec", &s], Some(config.clone()));
    let explicit = run(&["homotopy", "--spec", &s, "--x", "0.5,1", "--grid", "64", "--t-list", "0,1"], None);
    assert_eq!(from_config.code, EXIT_OK, "{}", from_config.err);
    assert_eq!(from_config.out, explicit.out);

    let overridden = run(&["homotopy", "--spec", &s, "--x", "0.5,0"], Some(config));
    let v: Value = serde_json::from_str(&overridden.out).unwrap();
    assert_eq!(v["invariance"]["x"], serde_json::json!([0.5, 0.0]));
    assert_eq!(v["invariance"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let config = scratch("typo.json");
    std::fs::write(&config, r#"{"gird": 64}"#).unwrap();
    let r = run(&["average", "--spec", &spec("euclidean2.json")], Some(config));
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.err.contains("gird"), "{}", r.err);
}

#[test]
fn transport_csv_has_one_row_per_step() {
    let r = run(
        &["transport", "--spec", &spec("conformal.json"), "--y", "0.6,-0.8", "--steps", "40", "--format", "csv"],
        None,
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let lines: Vec<&str> = r.out.lines().collect();
    assert_eq!(lines[0], "s,y1,y2,F");
    assert_eq!(lines.len(), 42);
    let last: Vec<f64> = lines[41].split(',').map(|c| c.parse().unwrap()).collect();
    assert!((last[0] - 8.0).abs() < 1e-12);
}

#[test]
fn homotopy_csv_lists_each_t() {
    let r = run(
        &["homotopy", "--spec", &spec("sphere3.json"), "--grid", "32", "--t-list", "0,0.5,1", "--format", "csv"],
        None,
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert_eq!(r.out.lines().count(), 4);
    assert!(r.out.starts_with('t'));
}

#[test]
fn text_format_lists_leaf_values() {
    let r = run(&["average", "--spec", &spec("euclidean2.json"), "--grid", "64", "--format", "text"], None);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let volume = r.out.lines().find(|l| l.starts_with("averaged.volume")).unwrap();
    assert_eq!(volume.split_whitespace().nth(1), Some("6.283185e0"));
    assert!(serde_json::from_str::<Value>(&r.out).is_err());
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let path = scratch("baoshen.json");
    let r = run(
        &["baoshen", "--spec", &spec("randers_witness.json"), "--x", "0.5,0", "--grid", "128", "--output", path.to_str().unwrap()],
        None,
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn reports_are_deterministic_across_worker_counts() {
    let s = spec("randers_witness.json");
    let base = ["average", "--spec", s.as_str(), "--x", "0.5,1", "--grid", "128"];
    let one = run(&[&base[..], &["--workers", "1"]].concat(), None);
    let many = run(&[&base[..], &["--workers", "3"]].concat(), None);
    let default = run(&base, None);
    assert_eq!(one.out, many.out);
    assert_eq!(one.out, default.out);
}

#[test]
fn help_exits_cleanly() {
    let r = run(&["--help"], None);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.out.contains("analyze"));
}

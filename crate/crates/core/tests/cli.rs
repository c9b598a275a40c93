//! End-to-end runs of the `l2t` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

fn l2t(args: &[&str]) -> Output {
    l2t_env(args, &[])
}

fn l2t_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_l2t"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn mahler_of_lehmer_polynomial() {
    let out = l2t(&["mahler", "--input", &fixture("lehmer.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.17628081826).abs() < 1e-10);
    assert_eq!(v["method"], "roots");
}

#[test]
fn smyth_polynomial_by_grid() {
    let out = l2t(&["--tol", "1e-5", "mahler", "--input", &fixture("smyth.json"), "--method", "grid"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.3813564445).abs() < 1e-3);
    assert_eq!(v["method"], "grid");
}

#[test]
fn trivially_twisted_trefoil_has_unit_torsion() {
    let out = l2t(&["graph", "--manifold", &fixture("trefoil_trivial.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn twisted_torus_has_unit_torsion() {
    let out = l2t(&[
        "torsion",
        "--complex",
        &fixture("torus_complex.json"),
        "--triple",
        &fixture("torus_triple.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn laplacian_method_agrees_on_the_torus() {
    let out = l2t(&["torsion", "--complex", &fixture("torus_complex.json"), "--method", "laplacian"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["value"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn malformed_input_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"k": 1, "terms": [{"exp": [1], "coeff": "x"}]}"#);
    let out = l2t(&["mahler", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json"), "{err}");
    assert!(err.contains("terms"), "{err}");

    let broken = write(dir.path(), "broken.json", "{\"k\": 1,");
    let out = l2t(&["mahler", "--input", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));

    let out = l2t(&["mahler", "--input", "/nonexistent/p.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn status_failure_exits_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let zero = r#"{"k": 1, "min_degree": 0, "ranks": [1, 1],
        "boundaries": [{"k": 1, "rows": 1, "cols": 1, "entries": [[[]]]}]}"#;
    let p = write(dir.path(), "zero.json", zero);
    let out = l2t(&["torsion", "--complex", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "not_weakly_acyclic");
}

#[test]
fn alexander_curve_as_csv() {
    let out = l2t(&[
        "--format",
        "csv",
        "alexander",
        "--manifold",
        &fixture("trefoil_trivial.json"),
        "--samples",
        "5",
        "--normalization",
        "symmetric",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,value");
    assert_eq!(lines.len(), 6);
    // Symmetric curve of a norm-one class: max(t, 1/t)^(1/2).
    for line in &lines[1..] {
        let (t, v) = line.split_once(',').unwrap();
        let (t, v): (f64, f64) = (t.parse().unwrap(), v.parse().unwrap());
        assert!((v - t.max(1.0 / t).sqrt()).abs() < 1e-9, "{line}");
    }
}

#[test]
fn fibered_reference_curve_leaves_the_gap_empty() {
    let out = l2t(&["--format", "csv", "alexander", "--entropy", "2", "--norm", "1", "--samples", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let middle = text.lines().nth(5).unwrap();
    assert!(middle.ends_with(','), "{middle}");
}

#[test]
fn quotient_preset_as_csv() {
    let out = l2t(&["--format", "csv", "quotient", "--preset", "torus-bundle", "--modulus", "3", "--t", "0.5", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = ["mahler", "--input", &fixture("smyth.json"), "--method", "grid"];
    let one = l2t_env(&args, &[("L2T_THREADS", "1")]);
    let four = l2t_env(&args, &[("L2T_THREADS", "4")]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);

    let args = ["alexander", "--manifold", &fixture("trefoil_t2.json"), "--samples", "16"];
    let one = l2t_env(&args, &[("L2T_THREADS", "1")]);
    let four = l2t_env(&args, &[("L2T_THREADS", "4")]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn out_flag_writes_parseable_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let m = r#"{"k": 1, "rows": 1, "cols": 1, "entries": [[[{"exp": [1], "coeff": [1.0, 0.0]},
        {"exp": [0], "coeff": [-2.0, 0.0]}]]]}"#;
    let mp = write(dir.path(), "m.json", m);
    let out = l2t(&["--out", path.to_str().unwrap(), "rdet", "--matrix", mp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

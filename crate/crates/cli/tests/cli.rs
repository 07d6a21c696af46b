use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kropina(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kropina")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const GRID: &str = "0.2,0.8,0.2,0.8,5,5";

#[test]
fn classify_minkowski_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = kropina(&[
        "classify",
        "--metric",
        r#"{"kind": "KropinaCanonical", "exprs": {"phi": "(x2^2 + 1)/(2 - x1)"}}"#,
        "--grid",
        GRID,
        "--dirs",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = &json(&out)["result"];
    assert_eq!(c["projective"]["status"], "pass");
    assert_eq!(c["minkowski"]["status"], "pass");
    assert_eq!(c["parabolic_type"]["status"], "fail");
    assert_eq!(c["constant_curvature_necessary"]["status"], "pass");
}

#[test]
fn classify_generic_and_parabolic() {
    let o = kropina(&["classify", "--metric", r#"{"kind": "KropinaCanonical", "exprs": {"phi": "sin(x1)"}}"#, "--grid", GRID]);
    assert_eq!(o.status.code(), Some(0));
    let c: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["result"]["projective"]["status"], "pass");
    assert_eq!(c["result"]["minkowski"]["status"], "fail");
    assert_eq!(c["result"]["constant_curvature_necessary"]["status"], "fail");

    let o = kropina(&["classify", "--metric", r#"{"kind": "Parabolic", "exprs": {"sigma": "x1"}}"#, "--grid", GRID]);
    let c: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["result"]["projective"]["status"], "pass");
    assert_eq!(c["result"]["parabolic_type"]["status"], "pass");
}

#[test]
fn classify_csv() {
    let o = kropina(&[
        "classify",
        "--metric",
        r#"{"kind": "MinkowskiLinear", "constants": {"k1": 1, "k2": 2, "k3": 3}}"#,
        "--grid",
        GRID,
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("flag,status,residual,at_point,detail\n"), "{text}");
    assert!(text.contains("\nminkowski,pass,"), "{text}");
}

#[test]
fn residuals_exit_codes() {
    let linear = r#"{"kind": "MinkowskiLinear", "constants": {"k1": 1, "k2": -2, "k3": 0.5}}"#;
    let o = kropina(&["residuals", "--system", "II-prime", "--metric", linear, "--grid", GRID]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    for e in r["result"]["report"]["equations"].as_array().unwrap() {
        assert_eq!(e["max_residual"], 0.0);
    }

    let beta = r#"{"kind": "KropinaGeneral", "exprs": {"A": "1", "B": "0", "C": "1", "D": "x1*x2"}}"#;
    let o = kropina(&["residuals", "--system", "beta", "--metric", beta, "--grid", GRID]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let eqs = r["result"]["report"]["equations"].as_array().unwrap();
    let worst = eqs.iter().find(|e| e["label"] == "beta-2").unwrap();
    assert!(worst["max_residual"].as_f64().unwrap() > 0.1);
    assert_eq!(worst["at_point"].as_array().unwrap().len(), 2);

    let rational = r#"{"kind": "MinkowskiRational", "constants": {"k1": 2, "k2": -0.5, "k3": 0.3, "k4": 1}}"#;
    let o = kropina(&["residuals", "--system", "constant-curvature", "--metric", rational, "--grid", GRID]);
    assert_eq!(o.status.code(), Some(0));
    let o = kropina(&[
        "residuals",
        "--system",
        "constant-curvature",
        "--equations",
        "as-printed",
        "--metric",
        rational,
        "--grid",
        GRID,
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn residuals_usage_errors() {
    let canonical = r#"{"kind": "KropinaCanonical", "exprs": {"phi": "x1*x2"}}"#;
    assert_eq!(kropina(&["residuals", "--system", "nope", "--metric", canonical]).status.code(), Some(2));
    assert_eq!(kropina(&["residuals", "--system", "alpha", "--metric", canonical]).status.code(), Some(2));
    assert_eq!(kropina(&["residuals", "--metric", canonical]).status.code(), Some(2));
    assert_eq!(kropina(&["residuals", "--system", "I"]).status.code(), Some(2));
    assert_eq!(kropina(&["residuals", "--system", "I", "--metric", canonical, "--order", "9"]).status.code(), Some(2));
    assert_eq!(kropina(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn residuals_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"metric": {"kind": "KropinaGeneral", "exprs": {"A": "1", "B": "0", "C": "1", "D": "(x1 + 1)/(2 - x2)"}},
            "grid": {"x1": [0.2, 0.8], "x2": [0.2, 0.8], "n1": 5, "n2": 5},
            "residuals": {"system": "kill-D", "d_case": {"rational": {"k1": 1, "k2": 2}}}}"#,
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let o = kropina(&["residuals", "--metric", cfg.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("system,equation,max_residual,at_point,pass\nkill-D,kill-D,"), "{text}");
}

#[test]
fn geodesic_minkowski_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = kropina(&[
        "geodesic",
        "--metric",
        r#"{"kind": "MinkowskiLinear", "constants": {"k1": 1, "k2": 0.5, "k3": 0}}"#,
        "--x0",
        "0,0",
        "--v0",
        "1,1",
        "--t-end",
        "1",
        "--steps",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,x1,x2,v1,v2\n"));
    assert_eq!(csv.lines().count(), 202);
    let summary = json(&dir.path().join("trace.csv.summary.json"));
    assert!(summary["result"]["summary"]["deviation"].as_f64().unwrap() < 1e-12);
    assert_eq!(summary["result"]["summary"]["termination"]["reason"], "completed");
}

#[test]
fn geodesic_projective_and_singular_start() {
    let canonical = r#"{"kind": "KropinaCanonical", "exprs": {"phi": "0.2*x1^2 + 3*x1 + 0.3*sin(x2)"}}"#;
    let o = kropina(&["geodesic", "--metric", canonical, "--x0", "0.5,0.5", "--v0", "1,0.4", "--t-end", "0.3", "--steps", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(summary["result"]["summary"]["deviation"].as_f64().unwrap() < 1e-6);

    let o = kropina(&["geodesic", "--metric", canonical, "--x0", "0.5,0.5", "--v0", "0,1", "--t-end", "1", "--steps", "100"]);
    assert_eq!(o.status.code(), Some(1));
    let summary: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(summary["result"]["error"].as_str().unwrap().contains("ImmediateSingularity"));

    let o = kropina(&["geodesic", "--metric", canonical, "--x0", "0.5,0.5", "--v0", "1,0", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suite_corpus_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    fs::write(
        &corpus,
        r#"[
            {"name": "linear", "metric": {"kind": "MinkowskiLinear", "constants": {"k1": 1, "k2": 2, "k3": 3}},
             "expect": {"projective": "pass", "minkowski": "pass"}},
            {"name": "broken", "metric": {"kind": "KropinaGeneral", "exprs": {"A": "1 + x2", "B": "0", "C": "1", "D": "0"}},
             "expect": {"projective": "pass"}},
            {"name": "generic", "metric": {"kind": "KropinaCanonical", "exprs": {"phi": "sin(x1)"}},
             "expect": {"projective": "pass", "minkowski": "fail"}}
        ]"#,
    )
    .unwrap();
    let out = dir.path().join("suite.json");
    let o = kropina(&["suite", "--corpus", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&out);
    let failing: Vec<&str> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["corpus:broken"]);

    fs::write(&corpus, "[]").unwrap();
    assert_eq!(kropina(&["suite", "--corpus", corpus.to_str().unwrap()]).status.code(), Some(2));
}

mod common;

use std::path::Path;
use std::process::Command;

use common::fixture;
use nullframe_core::cli::{parse_spec, CliError, SpecKind};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn nullframe(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nullframe"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_fixture(cmd: &str, name: &str, extra: &[&str]) -> (i32, Value) {
    let path = fixture(name);
    let mut args = vec![cmd, "--spec", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, stdout, stderr) = nullframe(&args);
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    if report.is_null() {
        assert!(!stderr.is_empty(), "no report and no diagnostic");
    }
    (code, report)
}

fn check(report: &Value, name: &str) -> f64 {
    report["summary"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn verify_c1_reports_oracle_curvatures() {
    let (code, r) = run_fixture("verify", "c1.json", &["--tol", "1e-8"]);
    assert_eq!(code, 0);
    for row in r["rows"].as_array().unwrap() {
        assert!(row["h"].as_f64().unwrap().abs() <= 1e-9);
        assert!((row["k1"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
        assert!((row["k2"].as_f64().unwrap() + 0.5).abs() <= 1e-9);
    }
    assert_eq!(r["rows"].as_array().unwrap().len(), 50);
}

#[test]
fn zero_step_is_a_usage_error() {
    let (code, r) = run_fixture("synth", "helix.json", &["--step", "0"]);
    assert_eq!(code, 2);
    assert!(r.is_null());
}

#[test]
fn slice_transfer_keeps_constancy() {
    let (code, r) = run_fixture("transfer", "slice_transfer.json", &[]);
    assert_eq!(code, 0);
    assert!(check(&r, "ambient_constancy") <= 1e-6);
}

#[test]
fn exit_codes_over_fixture_corpus() {
    let cases = [
        ("frame", "c1.json", 0),
        ("verify", "c1.json", 0),
        ("frame", "nonhelix.json", 0),
        ("verify", "nonhelix.json", 1),
        ("frame", "polar_field.json", 0),
        ("verify", "polar_field.json", 0),
        ("synth", "helix.json", 0),
        ("verify", "helix.json", 0),
        ("synth", "helix_general.json", 0),
        ("transfer", "slice_transfer.json", 0),
        ("transfer", "graph_transfer.json", 1),
        ("submanifold", "sphere.json", 0),
        ("submanifold", "cylinder.json", 0),
        ("submanifold", "pseudosphere.json", 0),
        ("submanifold", "slice.json", 0),
        ("frame", "sphere.json", 2),
        ("synth", "c1.json", 2),
        ("transfer", "helix.json", 2),
        ("submanifold", "slice_transfer.json", 2),
    ];
    for (cmd, name, expected) in cases {
        let (code, _) = run_fixture(cmd, name, &[]);
        assert_eq!(code, expected, "{cmd} {name}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, name) in [
        ("frame", "c1.json"),
        ("synth", "helix_general.json"),
        ("transfer", "graph_transfer.json"),
        ("submanifold", "pseudosphere.json"),
    ] {
        let mut outputs = Vec::new();
        for i in 0..2 {
            let out = dir.path().join(format!("{cmd}-{i}.json"));
            let spec = fixture(name);
            nullframe(&[
                cmd,
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{cmd} {name}");
    }
}

#[test]
fn report_metadata() {
    let (_, r) = run_fixture(
        "frame",
        "c1.json",
        &["--seed-order", "e1,e3,e2", "--samples", "7"],
    );
    assert_eq!(r["format_version"], 1);
    assert_eq!(r["command"], "frame");
    assert_eq!(r["spec_kind"], "curve");
    let bytes = std::fs::read(fixture("c1.json")).unwrap();
    assert_eq!(r["spec_sha256"], format!("{:x}", Sha256::digest(&bytes)));
    assert_eq!(r["config"]["seed_order"], "e1,e3,e2");
    assert_eq!(r["config"]["tol"], 1e-9);
    assert_eq!(r["rows"].as_array().unwrap().len(), 7);
}

#[test]
fn synth_writes_csv_with_contract_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let (code, r) = run_fixture(
        "synth",
        "helix.json",
        &[
            "--csv",
            csv.to_str().unwrap(),
            "--samples",
            "64",
            "--project",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(r["config"]["project_every"], 10);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x1,x2,x3,zeta1,zeta2,zeta3,n1,n2,n3,w1,w2,w3,gram_drift,cubic_residual"
    );
    assert_eq!(lines.count(), 64);
}

#[test]
fn csv_is_only_for_synth() {
    let (code, _) = run_fixture("frame", "c1.json", &["--csv", "/tmp/never.csv"]);
    assert_eq!(code, 2);
    assert!(!Path::new("/tmp/never.csv").exists());
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        run_fixture("frame", "c1.json", &["--seed-order", "e1,e1"]).0,
        2
    );
    assert_eq!(run_fixture("frame", "c1.json", &["--tol", "-1"]).0, 2);
    assert_eq!(run_fixture("frame", "c1.json", &["--samples", "1"]).0, 2);
    assert_eq!(nullframe(&["frame"]).0, 2);
    assert_eq!(nullframe(&["bogus", "--spec", "x"]).0, 2);
    assert_eq!(nullframe(&["frame", "--spec", "/nonexistent.json"]).0, 2);
    assert_eq!(nullframe(&["--help"]).0, 0);
}

fn spec_error(text: &str) -> String {
    match parse_spec(text.as_bytes()) {
        Err(CliError::Spec(m)) => m,
        other => panic!("expected a spec error, got {other:?}"),
    }
}

#[test]
fn load_spec_examples() {
    let doc = parse_spec(&std::fs::read(fixture("c1.json")).unwrap()).unwrap();
    assert_eq!(doc.kind, SpecKind::Curve);
    let m = spec_error(
        r#"{"metric": {"type":"field", "entries":[["1","x1"],["x2","1"]]},
            "curve": {"mode":"position","components":["t","t","t"],"domain":[0,1]}}"#,
    );
    assert!(m.contains("metric not symmetric at (1,2)"), "{m}");
    let m = spec_error(
        r#"{"metric": {"type":"diag","signs":[-1,-1,1]},
            "curve": {"mode":"position","components":["cos(t)","sin(t)","t"],"domain":[2,1]}}"#,
    );
    assert!(m.contains("empty domain"), "{m}");
}

#[test]
fn load_spec_rejects_unknown_and_malformed_fields() {
    let base = r#"{"metric": {"type":"diag","signs":[-1,-1,1]},
        "curve": {"mode":"position","components":["cos(t)","sin(t)","t"],"domain":[0,1]}"#;
    assert!(spec_error(&format!("{base}, \"extra\": 1}}")).contains("unknown field `extra`"));
    assert!(
        spec_error(&format!("{base}, \"config\": {{\"tolerance\": 1}}}}"))
            .contains("unknown field `tolerance`")
    );
    assert!(
        spec_error(&format!("{base}, \"config\": {{\"seed_order\": \"e4\"}}}}"))
            .contains("config.seed_order")
    );
    assert!(spec_error("[1, 2]").contains("JSON object"));
    assert!(spec_error("{").contains("invalid JSON"));
    assert!(spec_error(r#"{"nothing": 1}"#).contains("curve, helix"));
    let m = spec_error(
        r#"{"metric": {"dim": 4, "metric": {"type":"diag","signs":[-1,-1,1]}},
            "curve": {"mode":"position","components":["t","t","t"],"domain":[0,1]}}"#,
    );
    assert!(m.contains("dim is 4"), "{m}");
    let m = spec_error(
        r#"{"metric": {"type":"diag","signs":[-1,-1,1]},
            "curve": {"mode":"position","components":["t","q","t"],"domain":[0,1]}}"#,
    );
    assert!(m.contains("curve.components[1]"), "{m}");
    let m = spec_error(
        r#"{"metric": {"type":"diag","signs":[-1,-1,1]},
            "curve": {"mode":"tangent","components":["1","0","1"],"domain":[0,1]}}"#,
    );
    assert!(m.contains("curve.initial"), "{m}");
    let m = spec_error(
        r#"{"metric": {"type":"diag","signs":[-1,-1,1]},
            "helix": {"h":0,"k1":1,"k2":0,"initial_point":[0,0,0],
                      "initial_frame":{"zeta":[1,0,1],"n":[1,0,1],"w":[0,1,0]},
                      "domain":[0,1],"step":0.01}}"#,
    );
    assert!(m.contains("Gram"), "{m}");
    let m = spec_error(
        r#"{"intrinsic_dim": 2, "ambient": {"type":"diag","signs":[1,1,1]},
            "map": ["u1","u2","0"], "points": [[0,0,0]]}"#,
    );
    assert!(m.contains("points[0]"), "{m}");
}

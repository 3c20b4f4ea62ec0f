use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};

fn run(cmd: &str, config: &Value, dir: &Path) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_qpcocycle"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn amo_report_config() -> Value {
    json!({
        "schema_version": 1,
        "frequency": {"kind": "golden"},
        "potential": {"lambda": 0.5},
        "energies": {"min": -3.2, "max": 3.2, "points": 9},
    })
}

#[test]
fn report_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("report", &amo_report_config(), dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    let summary = &json["result"]["summary"];
    assert_eq!(summary["partition_ok"], true);
    assert_eq!(summary["total"], 9);
    assert_eq!(summary["supercritical"], 0);
    assert_eq!(json["config"]["schema_version"], 1);
    assert_eq!(json["config_sha256"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .contains(json["config_sha256"].as_str().unwrap()));
    assert_eq!(lines.next().unwrap(), "E,class,L0,accel,rho,ids,err");
    assert_eq!(lines.count(), 9);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "frequency": {"kind": "golden"},
        "potential": {"lambda": 2.0},
        "energy": 0.3,
        "heights": [0.0, 0.05, 0.1],
    });
    for cmd in ["accel", "cf"] {
        assert_eq!(run(cmd, &cfg, a.path()).status.code(), Some(0));
        assert_eq!(run(cmd, &cfg, b.path()).status.code(), Some(0));
        for ext in ["json", "csv"] {
            let name = format!("out/{cmd}.{ext}");
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }
}

#[test]
fn rational_frequency_is_rejected_by_conjugate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "frequency": {"kind": "decimal", "value": "0.4"},
        "potential": {"lambda": 0.3},
        "energy": 0.0,
        "theta": [0.05],
        "eps": [0.02],
    });
    let out = run("conjugate", &cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("irrational"));
}

#[test]
fn schema_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = amo_report_config();
    cfg["schema_version"] = json!(99);
    let out = run("report", &cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
    assert!(!dir.path().join("out/report.json").exists());
}

#[test]
fn invalid_grid_and_unknown_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = amo_report_config();
    cfg["grid"] = json!(100);
    assert_eq!(run("report", &cfg, dir.path()).status.code(), Some(1));
    assert_eq!(
        run("frobnicate", &amo_report_config(), dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn verdicts_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    // With θ = 0 the subcritical cocycle stays elliptic: no splitting exists.
    let cfg = json!({
        "schema_version": 1,
        "frequency": {"kind": "golden"},
        "potential": {"lambda": 0.3},
        "energy": 0.0,
        "theta": [0.0],
        "eps": [0.02],
        "conjugacy": {"grid": 128},
    });
    let out = run("conjugate", &cfg, dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let msg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(msg["verdict"], "NotUniformlyHyperbolic");
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_renyi");

fn renyi(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run renyi")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

fn records(out: &Output) -> Vec<Value> {
    lines(out).into_iter().filter(|v| v["type"] == "record").collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn eval_reports_header_record_and_summary() {
    let out = renyi(&["eval", "--functional", "kl_divergence", "--density", "exponential:rate=2", "--g", "exponential:rate=1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = lines(&out);
    assert_eq!(v.len(), 3);
    assert_eq!(v[0]["type"], "header");
    assert_eq!(v[0]["command"], "eval");
    assert_eq!(v[0]["seed"], 42);
    assert!(v[0]["timestamp"].is_u64());
    let value = v[1]["value"].as_f64().unwrap();
    assert!((value - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-10);
    assert_eq!(v[2]["type"], "summary");
    assert_eq!(v[2]["passes"], 1);
}

#[test]
fn usage_errors_exit_two() {
    let cases: [&[&str]; 5] = [
        &["eval", "--functional", "no_such", "--density", "exponential:rate=1"],
        &["eval", "--functional", "renyi_entropy", "--density", "exponential:rate=-1", "--alpha", "2"],
        &["check", "--theorem", "rrr", "--f", "exponential:rate=1", "--g", "witness", "--alpha", "2"],
        &["sweep"],
        &["bogus"],
    ];
    for args in cases {
        assert_eq!(renyi(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn witness_check_attains_equality() {
    let out = renyi(&["check", "--theorem", "rrr", "--f", "exponential:rate=1", "--g", "witness", "--alpha", "2", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    assert!(r["gap"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(r["witness_mode"], "corrected");
}

#[test]
fn printed_witness_exponent_misses_equality() {
    let out = renyi(&[
        "check", "--paper-witness", "--theorem", "rrr", "--f", "exponential:rate=1", "--g", "witness", "--alpha", "2", "--beta",
        "0",
    ]);
    let r = &records(&out)[0];
    let want = -2.0 * (0.5f64.sqrt() / 1.25).ln() - std::f64::consts::LN_2;
    assert!((r["gap"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn expected_gap_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"suites": [{"kind": "check", "theorem": "rrr", "f": "exponential:rate=1", "g": "witness",
            "witness_mode": "paper", "grid": {"alpha": 2, "beta": 0}, "expect_gap": {"value": 0, "tol": 1e-7}}]}"#,
    );
    let out = renyi(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(records(&out)[0]["status"], "fail");
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"suites": [{"kind": "bridge", "n": 3, "tol": 1e-8, "colour": "red"}]}"#);
    assert_eq!(renyi(&["sweep", "--config", &cfg]).status.code(), Some(2));
    let cfg = write(dir.path(), "d.json", "{not json");
    assert_eq!(renyi(&["sweep", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn sweep_json_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"seed": 5, "suites": [{"kind": "check", "name": "grid", "theorem": "escort:xi={xi}",
            "f": "exponential:rate=1", "g": "exponential:rate=2",
            "grid": {"alpha": [2, 3], "beta": 0.5, "xi": [0.5, 1]}}]}"#,
    );
    let json = renyi(&["sweep", "--config", &cfg, "--no-timestamp"]);
    assert_eq!(json.status.code(), Some(0));
    let header = &lines(&json)[0];
    assert_eq!(header["seed"], 5);
    assert!(header.get("timestamp").is_none());
    let recs = records(&json);
    assert_eq!(recs.len(), 4);
    let csv_path = dir.path().join("out.csv");
    let csv_out = renyi(&["sweep", "--config", &cfg, "--format", "csv", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(csv_out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert!(!headers.iter().any(|h| h == "type"));
    assert!(headers.iter().any(|h| h == "extras.xi"));
    let gap_col = headers.iter().position(|h| h == "gap").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), recs.len());
    for (row, rec) in rows.iter().zip(&recs) {
        assert_eq!(row[gap_col].parse::<f64>().unwrap(), rec["gap"].as_f64().unwrap());
    }
}

#[test]
fn random_suites_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.json", r#"{"suites": [{"kind": "random", "theorem": "rrr", "n": 5}]}"#);
    let run = |seed: &str| {
        let out = renyi(&["sweep", "--config", &cfg, "--seed", seed, "--no-timestamp"]);
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn transform_table_has_requested_rows() {
    let out = renyi(&["transform", "--spec", "escort:xi=2", "--density", "exponential:rate=1", "--rows", "11"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(&out).len(), 11);
    assert_eq!(renyi(&["transform", "--spec", "escort:xi=2", "--density", "exponential:rate=1", "--rows", "1"]).status.code(), Some(2));
}

use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

fn rellich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rellich")).args(args).output().expect("spawn rellich")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identities_on_seeded_corpus_pass() {
    let o = rellich(&["identities", "--dim", "3", "--seed", "7", "--count", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reps = v.as_array().unwrap();
    assert!(!reps.is_empty());
    assert!(reps.iter().all(|r| r["n"] == 3 && r["pass"] == true));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&rellich(&[])), 2);
    assert_eq!(code(&rellich(&["identities", "--tol", "-1"])), 2);
    assert_eq!(code(&rellich(&["identities", "--no-such-flag"])), 2);
    assert_eq!(code(&rellich(&["frobnicate"])), 2);
    assert_eq!(code(&rellich(&["oracle", "--dim", "5"])), 2);
    assert_eq!(code(&rellich(&["identities", "--corpus", "/nonexistent/corpus.json"])), 2);
    assert_eq!(code(&rellich(&["--help"])), 0);
}

#[test]
fn config_file_rejects_unknown_keys_and_yields_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"dim": [4], "count": 2, "format": "csv", "seed": 1}"#).unwrap();
    let o = rellich(&["inequalities", "--config", path(&cfg), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["n"] == 4));
    std::fs::write(&cfg, r#"{"dimension": [4]}"#).unwrap();
    assert_eq!(code(&rellich(&["inequalities", "--config", path(&cfg)])), 2);
}

#[test]
fn perturbation_is_reported_as_check_failure() {
    let o = rellich(&["identities", "--dim", "5", "--count", "3", "--perturb", "1e-4", "--ids", "thm11_right"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn radial_sharpness_csv_targets_r5_squared() {
    let o = rellich(&["sharpness", "--family", "radial", "--dim", "5", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["scan", "parameter", "value", "target", "gap"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let lap: Vec<_> = rows.iter().filter(|r| r[0].contains("D_r f")).collect();
    assert!(!lap.is_empty());
    assert!(lap.iter().all(|r| r[3].parse::<f64>().unwrap() == 25.0 / 16.0));
    let limit = lap.iter().find(|r| &r[1] == "limit").unwrap();
    assert!((limit[2].parse::<f64>().unwrap() - 1.5625).abs() < 5e-3 * 1.5625);
}

#[test]
fn bestconst_table_targets_121_over_16() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.json");
    let o = rellich(&[
        "bestconst",
        "--target",
        "rellich1d",
        "--t",
        "1.4641016151377544",
        "--sweep",
        "25,50",
        "--out",
        path(&out),
    ]);
    // the finite domain keeps the estimate above the 1% band
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let tab = &v[0];
    assert!((tab["target"].as_f64().unwrap() - 7.5625).abs() < 1e-12);
    assert_eq!(tab["from_above"], true);
    let rows = tab["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["estimate"].as_f64().unwrap() > 7.5625));
}

#[test]
fn bestconst_wide_domain_passes() {
    let o = rellich(&["bestconst", "--target", "rellich1d", "--a", "1e-20", "--R", "1e20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn explicit_corpus_file() {
    let specs = rellich_core::corpus::generate(3, 2, 4, Default::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("corpus.json");
    std::fs::write(&p, serde_json::to_string(&specs).unwrap()).unwrap();
    let o = rellich(&["oracle", "--corpus", path(&p), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // 4 functions, 3 quantities each
    assert_eq!(stdout(&o).lines().count(), 1 + 12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["identities", "--dim", "2,6", "--seed", "11", "--count", "8"],
        vec!["inequalities", "--dim", "3", "--seed", "11", "--count", "8", "--format", "csv"],
    ] {
        let mut outs = Vec::new();
        for i in 0..2 {
            let p = dir.path().join(format!("out{i}"));
            let mut a = args.clone();
            a.extend(["--out", path(&p)]);
            assert_eq!(code(&rellich(&a)), 0);
            outs.push(std::fs::read(&p).unwrap());
        }
        assert_eq!(outs[0], outs[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn exit_code_tracks_injected_failures(delta in prop_oneof![Just(0.0), -1e-2f64..-1e-6, 1e-6f64..1e-2], seed in 0u64..100) {
        let d = delta.to_string();
        let s = seed.to_string();
        let o = rellich(&["identities", "--dim", "3", "--count", "2", "--seed", &s, "--ids", "thm11_right,hardy_equality", "--perturb", &d]);
        prop_assert_eq!(code(&o), if delta == 0.0 { 0 } else { 1 });
    }
}

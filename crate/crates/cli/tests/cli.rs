use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pqft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqft")).args(args).env_remove("PQFT_OUT").output().expect("spawn pqft")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--deterministic", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    pqft(&args)
}

#[test]
fn koszul_passes_and_writes_expected_keys() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--scenario", "koszul", "--mode", "float"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("koszul.json")).unwrap()).unwrap();
    for key in ["scenario", "params", "residual_sup", "pass", "homotopy", "delta_squared", "projection"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["scenario"], "koszul");
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["params"]["lattice"]["dt"], "1/2");
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run_in(d.path(), &["--scenario", "cones", "--samples", "2000", "--seed", "5"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(a.path().join("cones.json")).unwrap(), fs::read(b.path().join("cones.json")).unwrap());
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--scenario", "probe"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for label in ["gaussian", "spike", "ridge"] {
        let text = fs::read_to_string(dir.path().join(format!("probe-{label}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some("bin_center_deg,slope,flagged"));
    }
    let o = run_in(dir.path(), &["--scenario", "counterexample"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("counterexample-diagonal-minus.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("xi1_re,xi1_im,xi2_re,xi2_im,abs_value"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"scenario":"star","temperature":3}"#).unwrap();
    let o = run_in(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("temperature"));
}

#[test]
fn invalid_lattice_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--scenario", "star", "--dt", "3"]);
    assert_eq!(code(&o), 2);
    let o = run_in(dir.path(), &["--scenario", "star", "--theta-lo", "6", "--theta-hi", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let o = run_in(&blocker.join("sub"), &["--scenario", "star"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_with_functionals_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let f = serde_json::json!({"k": 1, "n_sites": 64, "terms": [{"degree": 1, "entries": [[[3, 20], "1/2"]]}]});
    fs::write(dir.path().join("f.json"), f.to_string()).unwrap();
    let cfg = dir.path().join("cfg.json");
    let doc = serde_json::json!({"scenario": "koszul", "mode": "float", "seed": 1, "functionals": ["f.json", f]});
    fs::write(&cfg, doc.to_string()).unwrap();
    let o = run_in(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("koszul.json")).unwrap()).unwrap();
    assert_eq!(out["params"]["seed"], 4);
    assert_eq!(out["user_functionals"].as_array().unwrap().len(), 2);
}

#[test]
fn mismatched_functional_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let doc = serde_json::json!({"scenario": "koszul", "functionals": [{"k": 0, "n_sites": 5, "terms": []}]});
    fs::write(&cfg, doc.to_string()).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn env_output_dir_and_timestamped_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pqft"))
        .args(["run", "--scenario", "star"])
        .env("PQFT_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names.len(), 1);
    assert!(names[0].starts_with("star-") && names[0].ends_with(".json"), "{names:?}");
}

#[test]
fn schema_subcommand_prints_schema() {
    let o = pqft(&["schema"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["additionalProperties"], false);
}

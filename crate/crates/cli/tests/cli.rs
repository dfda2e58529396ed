use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{"grid": {"halfwidth": 8.0, "points": 96}, "dyadic": {"j_max": 5}, "corpus": {"count": 4}}"#;

fn specband(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specband"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("spawn specband")
}

fn with_config(text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, text).unwrap();
    (dir, path)
}

fn run(text: &str, args: &[&str]) -> (tempfile::TempDir, Output) {
    let (dir, path) = with_config(text);
    let mut full = args.to_vec();
    let p = path.to_str().unwrap().to_owned();
    full.extend(["--config", &p, "--out", "out"]);
    let out = specband(&full, dir.path());
    (dir, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn only_json(dir: &Path, experiment: &str) -> Value {
    let entry = std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with(&format!("{experiment}_")) && name.ends_with(".json")
        })
        .expect("report written");
    serde_json::from_str(&std::fs::read_to_string(entry).unwrap()).unwrap()
}

#[test]
fn validate_dyadic_passes_with_unit_sum() {
    let (dir, out) = run(SMALL, &["validate-dyadic"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = only_json(dir.path(), "validate-dyadic");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["schema_version"], 1);
    assert!((r["summary"]["sum_lower"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["summary"]["sum_upper"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn plateau_removed_control_fails_validation() {
    let (_dir, out) = run(SMALL, &["validate-dyadic", "--negative-control"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn report_echoes_effective_config() {
    let (dir, out) = run(SMALL, &["validate-dyadic", "--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let r = only_json(dir.path(), "validate-dyadic");
    let mut cfg = specband_cli::RunConfig::from_json(SMALL).unwrap();
    cfg.corpus.seed = 99;
    cfg.output.dir = PathBuf::from("out");
    assert_eq!(r["config"], cfg.echo());
    assert_eq!(r["seed"], 99);
    assert_eq!(r["timestamp"], Value::Null);
}

#[test]
fn decay_csv_header_is_fixed() {
    let (dir, out) = run(SMALL, &["decay", "--format", "csv"]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", stderr(&out));
    let csv = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv") && !p.to_string_lossy().contains(".uniformity"))
        .unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("j,N,alpha,c_N,resolved"));
    assert!(std::fs::read_dir(dir.path().join("out")).unwrap().all(|e| !e.unwrap().path().to_string_lossy().ends_with(".json")));
}

#[test]
fn unknown_key_exits_2_naming_it() {
    let (_dir, out) = run(r#"{"potental": "hermite"}"#, &["decay"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("potental"), "{}", stderr(&out));
}

#[test]
fn endpoint_exponent_exits_2() {
    let (_dir, out) = run(r#"{"equivalence": {"p_list": [1.0]}}"#, &["equivalence"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("equivalence.p_list"));
}

#[test]
fn malformed_json_reports_position() {
    let (_dir, out) = run("{\n  \"grid\": {\"points\": }\n}", &["decay"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn missing_config_and_bad_usage_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(specband(&["decay", "--config", "nope.json"], dir.path()).status.code(), Some(2));
    assert_eq!(specband(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(specband(&["decay", "--format", "xml"], dir.path()).status.code(), Some(2));
}

#[test]
fn mehler_needs_hermite() {
    let cfg = r#"{"potential": "zero", "grid": {"halfwidth": 8.0, "points": 64}}"#;
    let (_dir, out) = run(cfg, &["mehler"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Hermite"));
}

#[test]
fn tabulated_potential_missing_file_exits_2() {
    let cfg = r#"{"potential": {"kind": "tabulated", "path": "missing.csv"}, "grid": {"points": 64}}"#;
    let (_dir, out) = run(cfg, &["decay"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn same_config_same_bytes() {
    let (dir, path) = with_config(SMALL);
    let p = path.to_str().unwrap();
    let read = |sub: &str| {
        let mut files: Vec<_> = std::fs::read_dir(dir.path().join(sub))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    for _ in 0..2 {
        assert_eq!(specband(&["equivalence", "--config", p, "--out", "a"], dir.path()).status.code(), Some(0));
    }
    let first = read("a");
    std::fs::remove_dir_all(dir.path().join("a")).unwrap();
    specband(&["equivalence", "--config", p, "--out", "a"], dir.path());
    assert_eq!(first, read("a"));
    assert!(first.len() > 2);
}

#[test]
fn published_schema_is_current() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run_config.schema.json");
    let published: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(published, specband_cli::config_schema());
    let dir = tempfile::tempdir().unwrap();
    let out = specband(&["schema"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, published);
}

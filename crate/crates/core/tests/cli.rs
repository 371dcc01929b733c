use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_poisson-obstacles"));
    c.env_remove("POISSON_OBSTACLES_OUT");
    c
}

fn status(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("status line is JSON")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_VACANCY: &str = r#"{
  "kind": "vacancy",
  "model": {"d": 2, "nu": 0.5, "radius": 0.5, "side": 10.0, "particles": 100},
  "trials": 6,
  "samples": 500,
  "seed": 11
}"#;

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn vacancy_run_writes_artifacts_and_reports_ok() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_VACANCY);
    let out_dir = tmp.path().join("run");
    let out = bin()
        .args(["vacancy", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(status(&out)["status"], "ok");
    assert_eq!(
        listing(&out_dir),
        ["resolved_config.json", "summary.json", "trials.csv"]
    );
    let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,seed,L,nu,R,n_points,fraction,stderr"));
    assert_eq!(lines.count(), 6);
    assert!(!csv.contains('\r'));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_VACANCY);
    let mut dirs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let out = bin()
            .args(["vacancy", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        dirs.push(dir);
    }
    for name in ["trials.csv", "summary.json"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(a, fs::read(d.join(name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let out = bin()
        .args(["free-balls", "--seed", "5", "--out"])
        .arg(&first)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let resolved = first.join("resolved_config.json");
    let cfg: Value = serde_json::from_slice(&fs::read(&resolved).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["kind"], "free-balls");

    let second = tmp.path().join("second");
    let out = bin()
        .args(["free-balls", "--config"])
        .arg(&resolved)
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read(first.join("trials.csv")).unwrap(),
        fs::read(second.join("trials.csv")).unwrap()
    );
}

#[test]
fn environment_sets_output_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("from-env");
    let out = bin()
        .arg("bec-conditions")
        .env("POISSON_OBSTACLES_OUT", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("verdicts.csv").is_file());
    assert!(dir.join("sequences.csv").is_file());
}

#[test]
fn invalid_config_exits_two_without_output() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("never");
    for body in [
        r#"{"kind": "vacancy", "model": {"d": 2, "nu": -1.0, "radius": 0.5, "side": 10.0, "particles": 100}}"#,
        r#"{"kind": "vacancy", "trails": 4}"#,
        r#"{"kind": "vacancy""#,
        r#"{"kind": "clusters"}"#,
    ] {
        let cfg = write_config(tmp.path(), body);
        let out = bin()
            .args(["vacancy", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{body}");
        let s = status(&out);
        assert_eq!(s["status"], "config-error");
        assert_eq!(s["exit_code"], 2);
        assert!(!dir.exists(), "{body}");
    }
}

#[test]
fn missing_config_file_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = bin()
        .args(["tail", "--config"])
        .arg(tmp.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn subcritical_tail_exits_three_without_output() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("never");
    let cfg = write_config(
        tmp.path(),
        r#"{
  "kind": "tail",
  "model": {"d": 2, "nu": 0.5, "radius": 1.0, "side": 20.0, "particles": 400},
  "trials": 10,
  "nu_c": 1.0
}"#,
    );
    let out = bin()
        .args(["tail", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(status(&out)["status"], "regime-error");
    assert!(!dir.exists());
}

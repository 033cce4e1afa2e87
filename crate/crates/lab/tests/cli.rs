use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sdde(task: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let path = dir.join(format!("{task}.toml"));
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sdde"))
        .arg(task)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn halanay_prints_rate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdde("halanay", "[task]\na = 2.0\nb = 1.0\ntau = 1.0\n", dir.path(), &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("lambda = 0.44285"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["task"], "halanay");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn strict_check_exits_four_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nname = \"linear_retarded\"\na = 0.4\nb_lag = 1.0\n[sim]\nseed = 1\n[task]\ntrials = 500\n";
    let out = sdde("check", cfg, dir.path(), &["--strict"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("sdde: error=check-failed exit=4"), "{err}");
    assert!(dir.path().join("out/witness_H1_phi.csv").exists());
    assert!(dir.path().join("out/verdicts.json").exists());
    // Without --strict the same run succeeds.
    assert!(sdde("check", cfg, dir.path(), &[]).status.success());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = sdde("halanay", "[task]\na = 2.0\nb = 1.0\ntau = 1.0\nbogus = 3\n", dir.path(), &[]);
    assert_eq!(unknown.status.code(), Some(2));
    let mismatch = sdde("halanay", "[task]\nname = \"couple\"\n", dir.path(), &[]);
    assert_eq!(mismatch.status.code(), Some(2));
    let model = sdde("simulate", "[model]\nname = \"nope\"\n[sim]\nseed = 1\n", dir.path(), &[]);
    assert_eq!(model.status.code(), Some(2));
    let domain = sdde("halanay", "[task]\na = 1.0\nb = 2.0\ntau = 1.0\n", dir.path(), &[]);
    assert_eq!(domain.status.code(), Some(2));
}

#[test]
fn seed_override_changes_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nname = \"linear_retarded\"\na = 3.0\nb_lag = 1.0\nsigma = 0.5\n[sim]\nseed = 1\nstep = 0.01\nhorizon = 2.0\n";
    let read = |extra: &[&str]| {
        assert!(sdde("simulate", cfg, dir.path(), extra).status.success());
        fs::read(dir.path().join("out/trajectory.csv")).unwrap()
    };
    let a = read(&[]);
    let b = read(&["--seed", "1"]);
    let c = read(&["--seed", "2"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

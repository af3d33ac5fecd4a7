use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scatlab::experiment::RunManifest;

fn template(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn scatlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatlab")).args(args).output().expect("binary runs")
}

fn run_template(name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = template(name);
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    scatlab(&args)
}

fn edited(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(template(name)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from} not in {name}");
        text = text.replace(from, to);
    }
    let path = dir.join(format!("{name}-edited.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn free_check_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_template("free-check", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS gaussian_oracle_error"), "{stdout}");
    let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert!(m.passed);
    let v = &m.verdicts["gaussian_oracle_error"];
    assert!(v.pass && v.threshold == 1e-10 && !v.operation.is_empty());
    for f in ["diagnostics.csv", "report.json"] {
        assert!(m.file(f).is_some(), "{f} missing from inventory");
    }
    assert!(m.stale_files().unwrap().is_empty());
    assert!(dir.path().join("plot.py").is_file());
    let header = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(header.starts_with("time,mass,energy,h1,sigma,lp2,variance,cone_ext,gauge_deficit\n"));
}

#[test]
fn regime_violation_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "scatter-shortrange", &[("p = 3.0", "p = 1.0")]);
    let out = scatlab(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("short-range") && err.contains("long-range"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unreadable_or_malformed_config_exits_2() {
    assert_eq!(scatlab(&["run", "/definitely/not/here.toml"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "scenario = [").unwrap();
    assert_eq!(scatlab(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    let out = run_template("fk-lemma", dir.path(), &["--sweep", "seed"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn guard_violation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        edited(dir.path(), "conservation", &[("points = 1024", "points = 64"), ("half_width = 125.66370614359172", "half_width = 3.0")]);
    let out = scatlab(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn overflowing_datum_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "conservation", &[("amplitude = 1.0", "amplitude = 1e160")]);
    let out = scatlab(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failing_verdict_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "free-check", &[("gaussian_oracle_error = 1e-10", "gaussian_oracle_error = 0.0")]);
    let out = scatlab(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL gaussian_oracle_error"));
}

#[test]
fn seeded_sweep_fans_out_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let out = run_template("fk-lemma", &a, &["--sweep", "seed=1,2,3", "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifests: Vec<RunManifest> =
        (1..=3).map(|s| RunManifest::read(&a.join(format!("seed={s}")).join("manifest.json")).unwrap()).collect();
    assert!(manifests.iter().all(|m| m.passed));
    assert_ne!(manifests[0].file("fk_samples.csv"), manifests[1].file("fk_samples.csv"));

    let b = dir.path().join("b");
    assert_eq!(run_template("fk-lemma", &b, &["--seed", "2"]).status.code(), Some(0));
    let single = RunManifest::read(&b.join("manifest.json")).unwrap();
    assert_eq!(single.config.seed, Some(2));
    assert_eq!(single.files, manifests[1].files);
}

#[test]
fn identical_configs_give_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["free-check", "conservation"] {
        let (a, b) = (dir.path().join(format!("{name}-a")), dir.path().join(format!("{name}-b")));
        assert_eq!(run_template(name, &a, &["--quiet"]).status.code(), Some(0));
        assert_eq!(run_template(name, &b, &["--quiet"]).status.code(), Some(0));
        let ma = RunManifest::read(&a.join("manifest.json")).unwrap();
        let mb = RunManifest::read(&b.join("manifest.json")).unwrap();
        assert_eq!(ma.files, mb.files, "{name}");
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simest::manifest::RunManifest;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn simest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simest"))
        .args(args)
        .current_dir(dir)
        .env("SIMEST_OUTPUT_DIR", dir.join("out"))
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = simest(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn em_prints_single_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.csv"), "g1,g2\n0,0\n1,1\n2,2\n0,1\n").unwrap();
    let out = ok(dir.path(), &["em", "--input", "g.csv", "--loci", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("htf_0,htf_1,htf_2,htf_3,converged"));
    let htfs: f64 = lines[1].split(',').take(4).map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((htfs - 1.0).abs() < 1e-12);
}

#[test]
fn train_then_bootstrap_gives_one_row_per_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let reg = cfg("regression.json");
    ok(d, &["train", "--config", &reg, "--epochs", "1", "--out", "model.ffm"]);
    ok(d, &["simulate", "--config", &reg, "--n", "60", "--out", "d.csv"]);
    let out = ok(d, &["bootstrap", "--model", "model.ffm", "--data", "d.csv", "--replicates", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f: Vec<f64> = row.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!(f[1] <= f[2], "{row}");
    }
    assert!(d.join("model.trace.csv").exists());
    assert!(d.join("out/train.manifest.json").exists());
}

#[test]
fn toy_coverage_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["coverage", "--config", &cfg("toy.json"), "--out", "toy.csv"]);
    let got = std::fs::read_to_string(dir.path().join("toy.csv")).unwrap();
    let golden = include_str!("golden/toy_coverage.csv");
    assert_eq!(got, golden);
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("regression.json")).unwrap();
    let bad = text.replace("\"epochs\"", "\"epochss\"");
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = simest(dir.path(), &["train", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochss"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simest(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(simest(dir.path(), &["em", "--loci", "2"]).status.code(), Some(2));
    let out = simest(dir.path(), &["coverage", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.csv"), "g1,g2\n0,3\n").unwrap();
    let out = simest(dir.path(), &["em", "--input", "g.csv", "--loci", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &[
        "coverage", "--config", &cfg("toy.json"), "--seed", "99", "--replications", "30",
        "--out", "first.csv", "--manifest", "first.json",
    ]);
    let manifest = RunManifest::read(&d.join("first.json")).unwrap();
    assert_eq!(manifest.seeds.len(), 1);
    let config = manifest.config.clone().expect("coverage records its config");
    assert_eq!(config.seed, 99);
    assert_eq!(config.replications, 30);
    std::fs::write(d.join("replay.json"), config.to_json()).unwrap();
    ok(d, &["coverage", "--config", "replay.json", "--out", "second.csv", "--manifest", "second.json"]);
    let replay = RunManifest::read(&d.join("second.json")).unwrap();
    assert_eq!(replay.outputs[0].sha256, manifest.outputs[0].sha256);
    assert_eq!(replay.seeds, manifest.seeds);
}

#[test]
fn report_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy_coverage.csv");
    let out = ok(dir.path(), &["report", "--input", &golden.display().to_string()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("toy"));
}

#[test]
fn estimate_with_closed_form_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let toy = cfg("toy.json");
    ok(d, &["simulate", "--config", &toy, "--n", "10", "--datasets", "3", "--out", "d.csv"]);
    let out = ok(d, &["estimate", "--config", &toy, "--data", "d.csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("dataset,theta"));
}

#[test]
fn every_shipped_config_is_valid() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = simest::read_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), cfg.scenario);
        seen += 1;
    }
    assert!(seen >= 4);
}

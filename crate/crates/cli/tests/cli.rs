//! End-to-end checks of the `nte` binary: exit codes, output files and the
//! worker-count determinism contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nte")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn nte")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

#[test]
fn power_runs_are_bit_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("noleak.toml");
    let dirs = [tmp.path().join("w1"), tmp.path().join("w4")];
    for (dir, workers) in dirs.iter().zip(["1", "4"]) {
        let out = run(&[
            "keff",
            "--config",
            config.to_str().unwrap(),
            "--method",
            "power",
            "--population",
            "400",
            "--inactive",
            "3",
            "--active",
            "8",
            "--seed",
            "7",
            "--workers",
            workers,
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["results.jsonl", "trace.tsv", "phi.tsv", "eta.tsv", "census.tsv"] {
        assert_eq!(
            read(&dirs[0], name),
            read(&dirs[1], name),
            "{name} differs between worker counts"
        );
    }
}

#[test]
fn lambda_runs_are_bit_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("noleak.toml");
    let dirs = [tmp.path().join("w1"), tmp.path().join("w3")];
    for (dir, workers) in dirs.iter().zip(["1", "3"]) {
        let out = run(&[
            "keff",
            "--config",
            config.to_str().unwrap(),
            "--method",
            "lambda",
            "--histories",
            "20000",
            "--t-max",
            "0.003",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&dirs[0], "results.jsonl"), read(&dirs[1], "results.jsonl"));
}

#[test]
fn validate_reports_assumptions_and_exit_codes() {
    let config = configs().join("slab.toml");
    let out = run(&["validate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("H1"), "{stdout}");
    assert!(stdout.contains("N_max=3"), "{stdout}");

    // sigma_f = 0 everywhere, h3star required on the command line
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("nofission.toml");
    let text = std::fs::read_to_string(configs().join("noleak.toml"))
        .unwrap()
        .replace("sigma_f = 600.0", "sigma_f = 0.0")
        .replace("assume_h3star = true", "assume_h3star = false");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["validate", "--config", bad.to_str().unwrap(), "--require", "h3star"]);
    assert_eq!(out.status.code(), Some(1));

    // unknown key: usage error
    let broken = tmp.path().join("broken.toml");
    let text = std::fs::read_to_string(configs().join("noleak.toml")).unwrap()
        + "\n[domain.extra]\nfoo = 1\n";
    std::fs::write(&broken, text).unwrap();
    let out = run(&["validate", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // missing config: usage error
    let out = run(&["validate", "--config", "/nonexistent/none.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_method_is_a_usage_error() {
    let config = configs().join("noleak.toml");
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "keff",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "magic",
        "--out-dir",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_tunes_and_emits_a_config_that_hits_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("slab.toml");
    let dir = tmp.path().join("oracle");
    let out = run(&[
        "oracle",
        "--config",
        config.to_str().unwrap(),
        "--nx",
        "120",
        "--nmu",
        "8",
        "--tune",
        "1.0",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    let k = oracle["k"].as_f64().unwrap();
    assert!((k - 1.0).abs() <= 1.1e-3, "tuned k = {k}");
    assert!(dir.join("tuned.toml").exists());
    assert!(dir.join("phi.tsv").exists());

    // the emitted config reloads and its oracle k stays on target
    let dir2 = tmp.path().join("oracle2");
    let out = run(&[
        "oracle",
        "--config",
        dir.join("tuned.toml").to_str().unwrap(),
        "--nx",
        "120",
        "--nmu",
        "8",
        "--out-dir",
        dir2.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir2.join("oracle.json")).unwrap()).unwrap();
    let k2 = oracle2["k"].as_f64().unwrap();
    assert!((k2 - k).abs() < 1e-9, "reloaded tuned config k = {k2} vs {k}");
}

#[test]
fn report_renders_svg_from_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("noleak.toml");
    let dir = tmp.path().join("run");
    let out = run(&[
        "keff",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "power",
        "--population",
        "300",
        "--inactive",
        "2",
        "--active",
        "6",
        "--seed",
        "3",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["report", "--run-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.join("report.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // manifest accompanies the results and records the essentials
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(3));
    assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);
    assert!(manifest["results"].as_array().unwrap().len() == 1);
}

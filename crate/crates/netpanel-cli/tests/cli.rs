//! End-to-end runs of the binary against files on disk.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netpanel::{corrected_spec, flawed_spec, ModelSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netpanel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("netpanel-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Small deterministic panel: three waves that differ by a few toggles.
fn write_panel(dir: &Path) -> Vec<String> {
    let waves = [
        "0 1 0 0 1 0\n0 0 1 0 0 0\n1 0 0 1 0 0\n0 0 0 0 1 0\n1 0 0 0 0 1\n0 1 0 0 0 0\n",
        "0 1 0 0 1 0\n0 0 1 0 0 1\n1 0 0 1 0 0\n0 0 0 0 1 0\n1 0 0 0 0 1\n0 0 0 0 0 0\n",
        "0 1 0 0 0 0\n0 0 1 0 0 1\n1 0 0 1 0 0\n0 1 0 0 1 0\n1 0 0 0 0 1\n0 0 0 0 0 0\n",
    ];
    waves
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let path = dir.join(format!("wave{}.txt", i + 1));
            std::fs::write(&path, w).unwrap();
            path.display().to_string()
        })
        .collect()
}

fn write_simple_spec(dir: &Path) -> String {
    let spec = r#"[
        {"term": "edges", "binding": "endogenous"},
        {"term": "memory_stability", "binding": "lagged"}
    ]"#;
    let path = dir.join("spec.json");
    std::fs::write(&path, spec).unwrap();
    path.display().to_string()
}

#[test]
fn fixtures_parse_to_builtin_specs() {
    let flawed = ModelSpec::parse(&std::fs::read_to_string(fixture("flawed_lc.json")).unwrap())
        .unwrap();
    assert_eq!(flawed, flawed_spec());
    let corrected =
        ModelSpec::parse(&std::fs::read_to_string(fixture("corrected.json")).unwrap()).unwrap();
    assert_eq!(corrected, corrected_spec());
}

#[test]
fn audit_flawed_fixture_exits_3_with_findings() {
    let dir = workdir("audit-flawed");
    let out = run(&[
        "audit",
        "--spec",
        fixture("flawed_lc.json").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("audit.json")).unwrap()).unwrap();
    let severities: Vec<&str> = report["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["severity"].as_str().unwrap())
        .collect();
    assert_eq!(
        severities.iter().filter(|s| **s == "tautological").count(),
        2
    );
    assert_eq!(severities.iter().filter(|s| **s == "circular").count(), 1);
    assert!(report["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn audit_corrected_fixture_exits_0() {
    let dir = workdir("audit-corrected");
    let out = run(&[
        "audit",
        "--spec",
        fixture("corrected.json").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("audit.json")).unwrap()).unwrap();
    assert_eq!(report["has_leakage"], serde_json::json!(false));
    for f in report["findings"].as_array().unwrap() {
        let s = f["severity"].as_str().unwrap();
        assert!(s == "endogenous" || s == "lagged_safe", "severity {s}");
    }
}

#[test]
fn audit_allow_leakage_downgrades_exit() {
    let dir = workdir("audit-allow");
    let out = run(&[
        "audit",
        "--spec",
        fixture("flawed_lc.json").to_str().unwrap(),
        "--allow-leakage",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn non_binary_entry_exits_2_with_location() {
    let dir = workdir("badwave");
    let bad = dir.join("wave.txt");
    std::fs::write(&bad, "0 1\n2 0\n").unwrap();
    let spec = write_simple_spec(&dir);
    let out = run(&[
        "estimate",
        "--spec",
        &spec,
        "--waves",
        bad.to_str().unwrap(),
        bad.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(1, 0)") && err.contains("wave.txt"), "{err}");
}

fn estimate_args(dir: &Path, waves: &[String], spec: &str, seed: &str) -> Vec<String> {
    let mut v: Vec<String> = vec!["estimate".into(), "--spec".into(), spec.into(), "--waves".into()];
    v.extend(waves.iter().cloned());
    v.extend([
        "--seed".to_string(),
        seed.to_string(),
        "--nsim".to_string(),
        "200".to_string(),
        "--burnin".to_string(),
        "3000".to_string(),
        "--thin".to_string(),
        "50".to_string(),
        "--out".to_string(),
        dir.display().to_string(),
    ]);
    v
}

#[test]
fn estimate_is_byte_deterministic() {
    let dir = workdir("det");
    let waves = write_panel(&dir);
    let spec = write_simple_spec(&dir);

    let out1 = bin()
        .args(estimate_args(&dir.join("a"), &waves, &spec, "42"))
        .output()
        .unwrap();
    assert_eq!(out1.status.code(), Some(0), "{}", String::from_utf8_lossy(&out1.stderr));
    let out2 = bin()
        .args(estimate_args(&dir.join("b"), &waves, &spec, "42"))
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(0));

    let a = std::fs::read(dir.join("a/estimates.json")).unwrap();
    let b = std::fs::read(dir.join("b/estimates.json")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical estimates");
}

#[test]
fn simulate_reads_estimates_and_is_deterministic() {
    let dir = workdir("sim");
    let waves = write_panel(&dir);
    let spec = write_simple_spec(&dir);
    let est = bin()
        .args(estimate_args(&dir, &waves, &spec, "7"))
        .output()
        .unwrap();
    assert_eq!(est.status.code(), Some(0), "{}", String::from_utf8_lossy(&est.stderr));

    let sim_args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--spec".into(),
            spec.clone(),
            "--waves".into(),
            waves[2].clone(),
            "--params".into(),
            dir.join("estimates.json").display().to_string(),
            "--seed".into(),
            "9".into(),
            "--nsim".into(),
            "3".into(),
            "--burnin".into(),
            "2000".into(),
            "--thin".into(),
            "100".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let s1 = bin().args(sim_args(&dir.join("s1"))).output().unwrap();
    assert_eq!(s1.status.code(), Some(0), "{}", String::from_utf8_lossy(&s1.stderr));
    let s2 = bin().args(sim_args(&dir.join("s2"))).output().unwrap();
    assert_eq!(s2.status.code(), Some(0));

    for name in ["simulate.json", "sim_0001.txt", "sim_0003.txt"] {
        let a = std::fs::read(dir.join("s1").join(name)).unwrap();
        let b = std::fs::read(dir.join("s2").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across runs");
    }
    // simulated matrices reload as valid networks
    let body = std::fs::read_to_string(dir.join("s1/sim_0001.txt")).unwrap();
    assert!(body.starts_with("# config_hash="));
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
}

#[test]
fn gof_writes_report_and_csvs() {
    let dir = workdir("gof");
    let waves = write_panel(&dir);
    let spec = write_simple_spec(&dir);
    let mut args: Vec<String> = vec!["gof".into(), "--spec".into(), spec, "--waves".into()];
    args.extend(waves);
    args.extend([
        "--seed".into(),
        "3".into(),
        "--nsim".into(),
        "20".into(),
        "--burnin".into(),
        "2000".into(),
        "--thin".into(),
        "100".into(),
        "--out".into(),
        dir.display().to_string(),
    ]);
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("gof.json")).unwrap()).unwrap();
    let auc = report["report"]["auc_roc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    for name in ["roc.csv", "pr.csv", "esp.csv", "dsp.csv", "indegree.csv", "geodesic.csv"] {
        let body = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(body.starts_with("# config_hash="), "{name} missing hash line");
    }
}

#[test]
fn gof_rejects_flawed_spec_without_override() {
    let dir = workdir("gof-leak");
    let waves = write_panel(&dir);
    let mut args: Vec<String> = vec![
        "gof".into(),
        "--spec".into(),
        fixture("flawed_lc.json").display().to_string(),
        "--waves".into(),
    ];
    args.extend(waves);
    args.extend(["--seed".into(), "3".into(), "--out".into(), dir.display().to_string()]);
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("leakage"));
}

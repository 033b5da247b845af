use std::path::Path;
use std::process::{Command, Output};

fn aokr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aokr"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_SCAN: &str = r#"
engine = "quantum"
range = [6.2, 6.3]
step = 0.05
k = 3.0
kicks = 5
seed = 4
ensemble = { atoms = 40, cutoff = 64 }
"#;

#[test]
fn scan_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    write(&cfg, SMALL_SCAN);
    let out = dir.path().join("curve.csv");
    let res = aokr(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(res.stdout.is_empty());

    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# aokr "));
    assert!(lines[1].starts_with("# config {"));
    assert_eq!(lines[2], "abscissa,hbar,level,energy,sem,seed");
    assert_eq!(lines.len(), 3 + 3);

    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["config"]["kicks"], 5);
    assert_eq!(sidecar["config"]["realizations"], serde_json::Value::Null);
    assert_eq!(sidecar["points"][0]["realizations"], 3);
    assert!(sidecar["version"].is_string());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    write(&cfg, SMALL_SCAN);
    let res = aokr(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--kicks",
        "2",
        "--atoms",
        "10",
        "--range",
        "6.0",
        "6.1",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = String::from_utf8(res.stdout).unwrap();
    assert!(csv.contains("\"kicks\":2"));
    assert!(csv.contains("\"atoms\":10"));
    assert!(csv.lines().nth(3).unwrap().starts_with("6,"));
}

#[test]
fn scan_from_flags_only() {
    let res = aokr(&[
        "scan",
        "--engine",
        "theory",
        "--range",
        "0.5",
        "12.5",
        "--step",
        "1",
        "--k",
        "3.7",
        "--noise",
        "amplitude",
        "--levels",
        "1,2",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = String::from_utf8(res.stdout).unwrap();
    assert!(csv.contains("abscissa,hbar,level,d_classical,d_quantum"));
    assert_eq!(
        csv.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 2 * 13
    );
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(
        &cfg,
        &format!("{SMALL_SCAN}noise = \"amplitude\"\nlevels = [3.0]\n"),
    );
    let res = aokr(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("[0, 2]"));

    write(
        &cfg,
        &format!("{SMALL_SCAN}noise = \"amplitude\"\nlevels = []\n"),
    );
    let res = aokr(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(res.stdout.is_empty(), "no partial output");

    write(&cfg, &format!("{SMALL_SCAN}step = 0.1\n"));
    assert_eq!(
        aokr(&["scan", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    assert_eq!(aokr(&["scan", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        aokr(&["extract-k", "--energy", "90", "--level", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope").join("portrait.csv");
    let res = aokr(&[
        "portrait",
        "--epsilon",
        "0.02",
        "--iters",
        "1",
        "--out",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nope"));

    let cfg = dir.path().join("cutoff.toml");
    let tight = SMALL_SCAN
        .replace("cutoff = 64", "cutoff = 4, sigma = 0.5")
        .replace("kicks = 5", "kicks = 10");
    write(&cfg, &tight);
    assert_eq!(
        aokr(&["scan", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn portrait_with_zero_iterations_is_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let res = aokr(&[
        "portrait",
        "--epsilon",
        "0.04",
        "--level",
        "2",
        "--iters",
        "0",
        "--n-phi",
        "3",
        "--n-rho",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "phi,rho,trajectory");
    assert_eq!(rows.len(), 1 + 6);
    assert!(out.with_extension("json").exists());
}

#[test]
fn predict_and_extract() {
    let res = aokr(&[
        "predict",
        "--hbar",
        "6.283185307179586",
        "--k",
        "3.77",
        "--level",
        "2",
    ]);
    assert!(res.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let e = doc["resonance_energy"].as_f64().unwrap();
    assert!((e - 3.77f64 * 3.77 * 20.0 / 3.0).abs() < 1e-9);

    let res = aokr(&["extract-k", "--energy", &format!("{e}"), "--level", "2"]);
    assert!(res.status.success());
    let k: f64 = String::from_utf8(res.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((k - 3.77).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    write(
        &cfg,
        &SMALL_SCAN.replace("engine = \"quantum\"", "engine = \"eps-classical\""),
    );
    let a = aokr(&["scan", "--config", cfg.to_str().unwrap()]);
    let b = aokr(&["scan", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

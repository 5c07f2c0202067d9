//! End-to-end runs of the binary on the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

/// Parses a node CSV into `(x, value)` pairs.
fn node_values(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[1], f[3])
        })
        .collect()
}

#[test]
fn affine_solve_matches_linear_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], &configs().join("solve_affine_1d.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("node,x,y,u"));
    let rows = node_values(&text);
    assert_eq!(rows.len(), 9);
    for (k, (x, u)) in rows.into_iter().enumerate() {
        assert_eq!(x, k as f64 * 0.125);
        assert!((u - x).abs() <= 1e-12, "u({x}) = {u}");
    }
}

#[test]
fn eta_profile_matches_the_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["eta"], &configs().join("eta_constant.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,eta,eta_prime"));
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        // c = 2, b = 1: η = t + t², η' = 1 + 2t
        assert!((f[1] - (f[0] + f[0] * f[0])).abs() <= 1e-9, "{line}");
        assert!((f[2] - (1.0 + 2.0 * f[0])).abs() <= 1e-9, "{line}");
        count += 1;
    }
    assert!(count > 10);
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"space": {"kind": "grid", "lower": [0.0], "upper": [1.0], "h": -0.1}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["solve"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("space.h"));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], &dir.path().join("absent.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stalled_solve_exits_3_after_writing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"space": {"kind": "grid", "lower": [0.0], "upper": [1.0], "h": 0.125},
            "boundary": {"values": {"kind": "explicit", "values": [[[0.0], 0.0], [[1.0], 1.0]]}},
            "scheme": {"tol": 1e-14, "max_iter": 2}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["solve"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(out_dir.join("trace.csv").exists());
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("STALLED"));
}

#[test]
fn negative_absorption_violates_the_maximum_principle() {
    // Δ∞u = −4 with zero data has an interior maximum
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"space": {"kind": "grid", "lower": [-1.0, -1.0], "upper": [1.0, 1.0], "h": 0.2},
            "absorption": {"kind": "constant", "c": -4.0},
            "boundary": {"values": {"kind": "affine", "gradient": [0.0, 0.0], "offset": 0.0}},
            "scheme": {"tol": 1e-12}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["verify"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(4));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
    assert_eq!(summary["verdicts"]["max_on_boundary"], "false");
}

#[test]
fn shipped_verify_configs_pass() {
    for name in ["verify_zero.json", "verify_constant.json"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["verify"], &configs().join(name), dir.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn repeated_runs_are_byte_identical_and_plots_well_formed() {
    for (cmd, name) in [
        ("solve", "solve_drift_2d.json"),
        ("cones", "cones.json"),
        ("capacity", "capacity_bounded.json"),
        ("ekeland", "ekeland.json"),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let out = run(&[cmd], &configs().join(name), d.path());
            assert_eq!(out.status.code(), Some(0), "{name}");
        }
        for f in ["csv", "svg"].map(|ext| format!("{cmd}.{ext}")).iter().chain(["summary.json".to_string()].iter()) {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{name}: {f} differs");
        }
        let svg = std::fs::read_to_string(a.path().join(format!("{cmd}.svg"))).unwrap();
        assert!(roxmltree::Document::parse(&svg).is_ok(), "{name}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let cfg = configs().join("ekeland.json");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    run(&["ekeland"], &cfg, dirs[0].path());
    run(&["ekeland", "--seed", "8"], &cfg, dirs[1].path());
    run(&["ekeland", "--seed", "7"], &cfg, dirs[2].path());
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("ekeland.csv")).unwrap();
    assert_ne!(read(&dirs[0]), read(&dirs[1]));
    assert_eq!(read(&dirs[0]), read(&dirs[2]));
}

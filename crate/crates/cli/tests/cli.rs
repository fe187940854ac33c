use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use selfsim_cli::RunConfig;
use serde_json::Value;

fn selfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, config: &Value) -> String {
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string(config).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn run(cmd: &str, config: &str, out: &Path) -> Output {
    selfsim(&[
        cmd,
        "--config",
        config,
        "--output-dir",
        out.to_str().unwrap(),
    ])
}

/// A short run on a coarse grid.
fn small_config(alpha: f64) -> Value {
    serde_json::json!({
        "alpha": alpha,
        "grid": {"L": 16.0, "n": 513},
        "time": {"t_end": 1.0, "snapshot_times": [0.1, 0.2, 0.5, 1.0]},
    })
}

#[test]
fn profile_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &serde_json::json!({"seed": 4}));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("profile", &cfg, &a).status.success());
    let out = run("profile", &cfg, &b);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max_residual") && stdout.contains("A = "));
    for f in ["profile.csv", "profile.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let meta: Value = serde_json::from_slice(&fs::read(a.join("profile.json")).unwrap()).unwrap();
    assert!(meta["max_residual"].as_f64().unwrap() <= 1e-8);
    let csv = fs::read_to_string(a.join("profile.csv")).unwrap();
    assert!(csv.starts_with("zeta,phi,dphi\n"));
}

#[test]
fn invalid_exponent_is_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &serde_json::json!({"p": 0.5}));
    let out_dir = dir.path().join("out");
    let out = run("profile", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must be > 1"));
    assert!(!out_dir.join("profile.csv").exists());
}

#[test]
fn pde_writes_one_snapshot_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(1.0));
    let out_dir = dir.path().join("out");
    let out = run("pde", &cfg, &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let snaps: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.starts_with("snap_t"))
        .collect();
    assert_eq!(snaps.len(), 4, "{snaps:?}");
    assert!(out_dir.join("snap_t5.000000e-1.csv").exists());
    let meta: Value =
        serde_json::from_slice(&fs::read(out_dir.join("pde_run.json")).unwrap()).unwrap();
    for key in ["p", "alpha", "L", "n", "dt", "t_end", "snapshot_times"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).matches("ok").count(),
        4
    );
}

#[test]
fn zero_source_gives_zero_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(0.0));
    let out_dir = dir.path().join("out");
    assert!(run("pde", &cfg, &out_dir).status.success());
    for t in ["1.000000e-1", "1.000000e0"] {
        let text = fs::read_to_string(out_dir.join(format!("snap_t{t}.csv"))).unwrap();
        for line in text.lines().skip(1) {
            let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(u, 0.0);
        }
    }
}

#[test]
fn analyze_needs_its_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(1.0));
    let out = run("analyze", &cfg, &dir.path().join("empty"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing prerequisite"));
}

#[test]
fn zero_tolerance_on_a_coarse_grid_fails_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(1.0);
    config["grid"] = serde_json::json!({"L": 16.0, "n": 65});
    config["analysis"] = serde_json::json!({"epsilon_scheme": 0.0});
    let cfg = write_config(dir.path(), &config);
    let out_dir = dir.path().join("out");
    assert!(run("profile", &cfg, &out_dir).status.success());
    // The mass balance is already off on this grid; the snapshots are still written.
    assert_ne!(run("pde", &cfg, &out_dir).status.code(), Some(2));
    let out = run("properties", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(1));
    let reports: Value =
        serde_json::from_slice(&fs::read(out_dir.join("properties.json")).unwrap()).unwrap();
    let failed: Vec<&Value> = reports
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == false)
        .collect();
    assert!(!failed.is_empty());
    for r in failed {
        assert!(r["worst_margin"].as_f64().unwrap() < 0.0);
        assert!(r["witness"].as_object().is_some_and(|w| !w.is_empty()));
    }
}

#[test]
fn small_pipeline_passes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(1.0));
    let out_dir = dir.path().join("out");
    for cmd in ["profile", "pde", "analyze", "properties"] {
        let out = run(cmd, &cfg, &out_dir);
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let distances = fs::read_to_string(out_dir.join("distances.csv")).unwrap();
    assert!(distances.starts_with("t,sup_distance\n"));
    assert_eq!(distances.lines().count(), 5);
    let frame = fs::read_to_string(out_dir.join("frame_t1.000000e0.csv")).unwrap();
    assert!(frame.starts_with("zeta,F\n"));
    let sandwich: Value =
        serde_json::from_slice(&fs::read(out_dir.join("sandwich.json")).unwrap()).unwrap();
    assert_eq!(sandwich["passed"], true);
    assert!(sandwich["b"].as_f64().unwrap() >= sandwich["a"].as_f64().unwrap());
}

#[test]
fn config_round_trips_through_the_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &serde_json::json!({"p": 3.0, "seed": 9}));
    let out_dir = dir.path().join("out");
    assert!(run("profile", &cfg, &out_dir).status.success());
    let echoed = RunConfig::load(&out_dir.join("config.json")).unwrap();
    let mut expected = RunConfig::load(Path::new(&cfg)).unwrap();
    expected.output_dir = out_dir.clone();
    assert_eq!(echoed, expected);
    let again = dir.path().join("again.json");
    fs::write(&again, serde_json::to_string(&echoed).unwrap()).unwrap();
    assert_eq!(RunConfig::load(&again).unwrap(), echoed);
}

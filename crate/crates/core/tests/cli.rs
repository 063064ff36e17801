use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wta_core::output::read_trajectory_csv;
use wta_core::{Scenario, Vec3};

fn wta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wta"))
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    wta(&args)
}

#[test]
fn baseline_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--assigner", "hungarian", "--emit-plots"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "metrics.json", "initial.svg", "final.svg"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    assert!(!dir.path().join("replay.jsonl").exists());
    let rows = read_trajectory_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert!(rows.iter().any(|r| r.side == "interceptor"));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["metrics"]["targets_intercepted"], 10);
    assert_eq!(metrics["metrics"]["assets_breached"], 0);
    let svg = fs::read_to_string(dir.path().join("final.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("class=\"intercept\""));
}

#[test]
fn llm_run_writes_replay_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--assigner", "llm", "--backend", "mock://malformed_once_then_valid"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = dir.path().join("replay.jsonl");
    assert!(log.is_file());
    let out = wta(&["replay", "--log", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["--assigner", "telepathy"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--assigner", "llm"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--assigner", "hungarian", "--switch-penalty", "-1"]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    let out = run_in(dir.path(), &["--assigner", "hungarian", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_scenario_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::<f64>::baseline();
    s.physics.sim_dt = -1.0;
    let path = dir.path().join("bad.toml");
    fs::write(&path, s.to_toml_string().unwrap()).unwrap();
    assert_eq!(run_in(dir.path(), &["--assigner", "hungarian", "--scenario", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn breach_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::<f64>::baseline();
    s.physics.a_max = 1e-9;
    for t in &mut s.targets {
        t.maneuver_accel = Vec3::zero();
    }
    for m in &mut s.interceptors {
        m.initial_state.velocity = Vec3::zero();
    }
    let path = dir.path().join("slow.toml");
    fs::write(&path, s.to_toml_string().unwrap()).unwrap();
    let out = run_in(dir.path(), &["--assigner", "hungarian", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["metrics"]["assets_breached"].as_u64().unwrap() > 0);
}

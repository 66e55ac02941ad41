use std::path::{Path, PathBuf};
use std::process::Command;

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/three_equilibria.json")
}

fn riskeq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_riskeq")).args(args).output().unwrap()
}

fn run_mode(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec![mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    riskeq(&args)
}

#[test]
fn census_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run_mode("raeq-census", &bundled(), dir.path(), &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ra = std::fs::read(a.path().join("results.csv")).unwrap();
    let rb = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(a.path().join("summary.txt").exists());
}

#[test]
fn sweep_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let grid = ["--seed-grid", "1.22,1.255,2.05,2.18,15,15"];
    for dir in [&a, &b] {
        assert!(run_mode("sweep", &bundled(), dir.path(), &grid).status.success());
    }
    let ra = std::fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(ra, std::fs::read_to_string(b.path().join("results.csv")).unwrap());
    assert!(ra.lines().skip(1).any(|l| l.contains(",B,Unstable,")));
}

#[test]
fn vector_field_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_mode("vector-field", &bundled(), dir.path(), &["--seed-grid", "1,4,1,9.6,4,5"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(riskeq::FIELD_HEADER));
    assert_eq!(text.lines().count(), 21);
    // Last node is the choke price vector.
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert!(last[2].parse::<f64>().unwrap() > 0.0 && last[3].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(bundled()).unwrap().replace("\"r\": [2, 10]", "\"r\": [0, 10]");
    std::fs::write(&bad, text).unwrap();
    let out = run_mode("raeq-census", &bad, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r[0]"));

    let unknown = dir.path().join("unknown.json");
    let text = std::fs::read_to_string(bundled()).unwrap().replacen('{', "{\"gamma\": 1,", 1);
    std::fs::write(&unknown, text).unwrap();
    let out = run_mode("raeq-census", &unknown, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    let out = run_mode("rnsp", &bundled(), dir.path(), &["--tol", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn planner_iteration_limit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("limit.json");
    let text = r#"{
  "c": 1,
  "c_r": [1, 2, 3],
  "v": [3, 5, 2],
  "r": [1, 2, 1],
  "risk_extremes": [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]],
  "max_iter": 1
}"#;
    std::fs::write(&cfg, text).unwrap();
    let out = run_mode("rasp", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let ok = dir.path().join("ok.json");
    std::fs::write(&ok, text.replace("\"max_iter\": 1", "\"max_iter\": 10000")).unwrap();
    assert!(run_mode("rasp", &ok, dir.path(), &[]).status.success());
}

#[test]
fn failed_sweep_seeds_are_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("slow.json");
    let text = std::fs::read_to_string(bundled())
        .unwrap()
        .replace("\"tau\": 0.1,", "\"tau\": 0.1,\n  \"max_iter\": 1,\n  \"sweep_method\": \"tatonnement\",");
    std::fs::write(&cfg, text).unwrap();
    let out = run_mode("sweep", &cfg, dir.path(), &["--seed-grid", "1.0,1.1,2.5,2.6,2,2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 failed seeds"));
}

#[test]
fn tatonnement_and_raad_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_mode("tatonnement", &bundled(), dir.path(), &[]);
    assert!(out.status.success());
    let summary = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(summary.contains("final prices: (1.2255"), "{summary}");

    let out = run_mode("raad", &bundled(), dir.path(), &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("checks pass: true"));
}

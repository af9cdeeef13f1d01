use std::process::Command;

fn alh(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_alh")).args(args).output().expect("binary runs")
}

#[test]
fn theta_prints_schema_json() {
    let o = alh(&["theta", "--alpha", "2", "--kmin", "1", "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["manifest"]["command"], "theta");
}

#[test]
fn usage_error_exit_code() {
    assert_eq!(alh(&["simulate", "--flow", "t99"]).status.code(), Some(3));
    assert_eq!(alh(&[]).status.code(), Some(3));
}

#[test]
fn numerical_guard_exit_code() {
    let o = alh(&["simulate", "--init", "random", "--seed", "7", "--cadence", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn verify_recursion_passes() {
    let o = alh(&["verify", "--suite", "recursion", "--order", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn timing_flag_adds_wall_time() {
    let plain = alh(&["simulate", "--N", "8", "--steps", "10"]);
    let timed = alh(&["--timing", "simulate", "--N", "8", "--steps", "10"]);
    let a: serde_json::Value = serde_json::from_slice(&plain.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(a["manifest"].get("wall_time_s").is_none());
    assert!(b["manifest"]["wall_time_s"].is_f64());
}

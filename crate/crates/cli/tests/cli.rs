//! End-to-end tests of the `npfp` binary: exit codes, strict config
//! parsing, output files, and flag handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn npfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npfp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn analyze_schedulable_config_exits_zero() {
    let config = repo_path("configs/tx2_case_study.json");
    let out = npfp(&["analyze", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schedulable"], true);
    assert_eq!(json["tasks"][0]["response_time_us"], 1_555_000);
    assert_eq!(json["tasks"][1]["response_time_us"], 1_555_000);
}

#[test]
fn analyze_overloaded_config_exits_two() {
    let config = repo_path("configs/tx2_monolithic.json");
    let out = npfp(&["analyze", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schedulable"], false);
    assert_eq!(json["tasks"][0]["diverged"], true);
}

#[test]
fn malformed_json_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"taskset\": { \n]").unwrap();
    let out = npfp(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("line 2"), "diagnostic missing location: {err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(
        &path,
        r#"{
  "taskset": { "count": 1, "periods_ms": [1000], "platform": "server" },
  "batch_tables": { "synthesize_gain": 0.3 },
  "frobnicate": true
}"#,
    )
    .unwrap();
    let out = npfp(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("frobnicate"), "{err}");
}

#[test]
fn simulate_refuses_unschedulable_without_force() {
    let config = repo_path("configs/tx2_monolithic.json");
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn simulate_writes_all_outputs() {
    let config = repo_path("configs/orin_four_task.json");
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--horizon-ms",
        "10000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["trace.csv", "trace.json", "report.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("time_us,kind,task_ids,batch_size,duration_us\n"));
}

#[test]
fn coarse_only_policy_reports_zero_fine_rates() {
    let config = repo_path("configs/orin_four_task.json");
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--policy",
        "c",
        "--horizon-ms",
        "20000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    for task in report["tasks"].as_array().unwrap() {
        assert_eq!(task["fine_completion_rate"], 0.0);
        assert_eq!(task["fine_completed"], 0);
    }
}

#[test]
fn sweep_row_count_is_seeds_times_policies() {
    let config = repo_path("configs/orin_four_task.json");
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--seeds",
        "1..5",
        "--policy",
        "c,cbfb",
        "--horizon-ms",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    // Header plus 2 policies x 5 seeds.
    assert_eq!(csv.lines().count(), 1 + 10);
}

#[test]
fn sweep_empty_policy_list_exits_one() {
    let config = repo_path("configs/orin_four_task.json");
    let out = npfp(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--policy",
        "",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_policy_flag_exits_one() {
    let config = repo_path("configs/orin_four_task.json");
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--policy",
        "zz",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

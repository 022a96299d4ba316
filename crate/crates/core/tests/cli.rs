use std::path::Path;
use std::process::{Command, Output};

fn skelcover(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skelcover"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_writes_every_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = skelcover(&["run", "--scene", "y_tube", "--points", "8000", "--workers", "2", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "skeleton.txt",
        "labels.txt",
        "subspaces.csv",
        "viewpoints.csv",
        "path.csv",
        "path.obj",
        "plan_diagnostics.json",
        "trajectory.csv",
        "trajectory.json",
        "feasibility.json",
        "report.json",
        "report.txt",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["subspace_count"].as_u64().unwrap() >= 3);
    assert_eq!(report["feasible"], serde_json::Value::Bool(true));
    assert!(String::from_utf8_lossy(&o.stdout).contains("coverage (%)"));
}

#[test]
fn stage_subcommands_stop_at_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = skelcover(&["skeletonize", "--scene", "cylinder", "--points", "6000", "--out", out.join("s").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert!(out.join("s/skeleton.txt").is_file());
    let o = skelcover(&["viewpoints", "--scene", "tower", "--points", "6000", "--out", out.join("v").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert!(out.join("v/viewpoints.csv").is_file());
    assert!(!out.join("v/path.csv").exists());
    let o = skelcover(&["plan", "--scene", "tower", "--points", "6000", "--mode", "nr", "--out", out.join("p").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert!(out.join("p/path.csv").is_file());
    assert!(!out.join("p/trajectory.csv").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nvoxel = 0.2\n").unwrap();
    assert_eq!(code(&skelcover(&["run", "--scene", "y_tube", "--config", bad.to_str().unwrap()], &[])), 2);
    assert_eq!(code(&skelcover(&["run", "--scene", "octopus"], &[])), 2);
    assert_eq!(code(&skelcover(&["run", "--input", "/nonexistent/cloud.ply"], &[])), 2);
    assert_eq!(code(&skelcover(&["plan", "--scene", "y_tube", "--mode", "fastest"], &[])), 2);
    assert_eq!(code(&skelcover(&["skeletonize", "--scene", "y_tube"], &[("SKELCOVER_PLANNER__LIMITS__J_MAX", "0")])), 2);
    assert_eq!(code(&skelcover(&["frobnicate"], &[])), 2);
    assert_eq!(code(&skelcover(&["run"], &[])), 2);
    assert_eq!(code(&skelcover(&["--help"], &[])), 0);
}

#[test]
fn malformed_cloud_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("broken.xyz");
    std::fs::write(&f, "0 0 0\n1 1\n").unwrap();
    let o = skelcover(&["skeletonize", "--input", f.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn start_in_collision_is_rejected() {
    let o = skelcover(&["plan", "--scene", "cylinder", "--points", "6000"], &[("SKELCOVER_START", "[1.0, 0.0, 5.0]")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("taken");
    std::fs::write(&file, "").unwrap();
    let o = skelcover(&["run", "--scene", "tower", "--points", "6000", "--out", file.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_emits_one_row_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let o = skelcover(
        &["bench", "--scenes", "y_tube,tower", "--modes", "full,go", "--seeds", "1,2", "--points", "6000", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[0].starts_with("scene,mode,seed"));
    assert!(lines[1].starts_with("y_tube,full,1,"));
}

#[test]
fn ablate_prints_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = skelcover(&["ablate", "--scene", "y_tube", "--points", "8000", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for m in ["full", "nr", "go"] {
        assert!(text.lines().any(|l| l.starts_with(m)), "{text}");
    }
    assert!(Path::new(&dir.path().join("ablation.json")).is_file());
}

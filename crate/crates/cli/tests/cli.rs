//! Runs the binary: exit codes, trajectory export and trace checking.

use std::path::Path;
use std::process::{Command, Output};

fn mtlplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlplan")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mtlplan-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn plan_into(dir: &Path, n: &str) -> Output {
    mtlplan(&["plan", "--builtin", "rescue", "-N", n, "--out", dir.to_str().unwrap()])
}

#[test]
fn single_vehicle_plan_passes_without_waiting() {
    let dir = tmp("single");
    let o = plan_into(&dir, "1");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
    let rows: Vec<&str> = report.lines().filter(|l| l.starts_with("1 ")).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(cols[cols.len() - 2], "0", "{row}");
        assert_eq!(cols[cols.len() - 1], "yes", "{row}");
    }
    assert!(!report.contains("solve(s)"));
}

#[test]
fn identical_runs_write_identical_files_and_traces_check() {
    let (a, b) = (tmp("det-a"), tmp("det-b"));
    assert_eq!(plan_into(&a, "2").status.code(), Some(0));
    assert_eq!(plan_into(&b, "2").status.code(), Some(0));
    for f in ["trajectories.csv", "report.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = a.join("trajectories.csv");
    let csv = csv.to_str().unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("uav,t,x,y,z,mode\n"));

    let ok = mtlplan(&["check-trace", "--trajectory", csv, "--formula", "F[0,12] C & G !O", "--builtin", "rescue", "--uav", "2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).trim(), "pass");

    let bad = mtlplan(&["check-trace", "--trajectory", csv, "--formula", "G !A", "--builtin", "rescue"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("fail at t=0"), "{}", stdout(&bad));

    let cut = tmp("truncated");
    std::fs::create_dir_all(&cut).unwrap();
    let truncated = cut.join("t.csv");
    std::fs::write(&truncated, &text[..text.len() / 2 - 3]).unwrap();
    let err = mtlplan(&["check-trace", "--trajectory", truncated.to_str().unwrap(), "--formula", "G !A", "--builtin", "rescue"]);
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("schema error"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(mtlplan(&["plan"]).status.code(), Some(2));
    assert_eq!(mtlplan(&["plan", "--builtin", "rescue", "-N", "0"]).status.code(), Some(2));
    assert_eq!(mtlplan(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mtlplan(&["plan", "--scenario", "/nonexistent.json"]).status.code(), Some(2));
    let o = mtlplan(&["check-trace", "--trajectory", "x.csv", "--formula", "G (", "--builtin", "rescue"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lp_export_writes_one_file_per_solved_model() {
    let dir = tmp("lp");
    let o = mtlplan(&["export-lp", "--builtin", "rescue", "-N", "1", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 6);
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        assert!(text.contains("Minimize") && text.trim_end().ends_with("End"), "{}", f.display());
    }
}

#[test]
fn small_prop_suite_agrees() {
    let o = mtlplan(&["prop-suite", "--cases", "50", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cases 50 agree 50"));
}

#[test]
fn scenario_file_plans_and_checks() {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hop.json");
    let scenario = scenario.to_str().unwrap();
    let dir = tmp("hop");
    let o = mtlplan(&["plan", "--scenario", scenario, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("1 ")).count(), 3);
    let csv = dir.join("trajectories.csv");
    let o = mtlplan(&["check-trace", "--trajectory", csv.to_str().unwrap(), "--formula", "G !O & F[0,20] B", "--scenario", scenario]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

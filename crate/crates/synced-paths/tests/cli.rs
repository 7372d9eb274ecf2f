//! Drives the compiled binary end to end: file outputs, exit codes, stderr
//! diagnostics, and byte-level determinism of the written traces.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use synced_paths::scenario::Scenario;

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synced-paths"))
        .args(args)
        .output()
        .expect("binary should start")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn demo_writes_the_three_advertised_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["demo", "example1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    for name in [
        "example1_sync.csv",
        "example1_nosync.csv",
        "example1_metrics.txt",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let stdout = stdout_of(&out);
    assert!(stdout.contains("example1_metrics.txt"), "stdout: {stdout}");
    assert!(
        stdout.contains("max |dy_c| at a switch"),
        "stdout: {stdout}"
    );

    let report = fs::read_to_string(dir.path().join("example1_metrics.txt")).unwrap();
    assert!(report.contains("sync_on.switch.1.jump = "), "{report}");
    assert!(report.contains("sync_off.switch.7.jump = "), "{report}");
    assert!(report.contains("sync_on.epoch.8.itae = "), "{report}");
    assert!(
        report.contains("sync_off.epoch.1.oscillation_energy = "),
        "{report}"
    );

    let csv = fs::read_to_string(dir.path().join("example1_sync.csv")).unwrap();
    assert!(
        csv.starts_with("t,y_c,x_c1,x_c2,y1,y2,w,u,e1,e2\n"),
        "unexpected header"
    );
}

#[test]
fn separate_invocations_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("a");
    let d2 = dir.path().join("b");
    for d in [&d1, &d2] {
        let out = run_cli(&["run", "builtin:example2a", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let a = fs::read(d1.join("example2a_sync.csv")).unwrap();
    let b = fs::read(d2.join("example2a_sync.csv")).unwrap();
    assert_eq!(a, b, "same scenario, different bytes");
}

#[test]
fn no_sync_runs_are_named_accordingly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&[
        "run",
        "builtin:example1",
        "--no-sync",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(dir.path().join("example1_nosync.csv").is_file());
    assert!(!dir.path().join("example1_sync.csv").exists());
}

#[test]
fn validate_accepts_good_files_and_cites_the_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("two_stage.scn");
    let text = Scenario::builtin("example1").unwrap().to_text();
    fs::write(&good, &text).unwrap();
    let out = run_cli(&["validate", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).starts_with("ok:"));

    let needle = "plant1.den = 12, 4, 1";
    let bad_line = text.lines().position(|l| l == needle).unwrap() + 1;
    let bad = dir.path().join("broken.scn");
    fs::write(&bad, text.replace(needle, "plant1.den = 12, four, 1")).unwrap();
    let out = run_cli(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(
        stderr.contains(&format!("line {bad_line}")),
        "stderr should cite line {bad_line}: {stderr}"
    );
}

#[test]
fn metrics_scores_a_previously_written_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&[
        "run",
        "builtin:example2b",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let trace = dir.path().join("example2b_sync.csv");
    let out = run_cli(&[
        "metrics",
        trace.to_str().unwrap(),
        "--scenario",
        "builtin:example2b",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("sync_on.switch.1.time = 35"), "{stdout}");
    assert!(stdout.contains("sync_on.epoch.2.itae = "), "{stdout}");
}

#[test]
fn numeric_blowups_exit_with_code_three() {
    // An open-loop unstable stage with a vanishing controller gain grows as
    // e^t from its initial state and overflows a little past t = 709.
    let text = "\
plant1.num = 1
plant1.den = -1, 1
plant1.initial = 1
path1.setpoint = 0
path1.controller = pi
path1.kp = 0.000000001
path1.ki = 0
path1.measurement = 1
w.period = 800
w.active_fraction = 1
w.phase = 0
w.enabled = true
u.period = 800
u.active_fraction = 1
u.phase = 0
u.enabled = false
sim.dt = 0.01
sim.t_end = 800
sim.record_stride = 100
";
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("runaway.scn");
    fs::write(&file, text).unwrap();
    let out = run_cli(&["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let out = run_cli(&[
        "run",
        file.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("non-finite"),
        "{}",
        stderr_of(&out)
    );
    // The aborted run must not leave a partial trace behind.
    assert!(!dir.path().join("runaway_sync.csv").exists());
    assert!(!Path::new("runaway_sync.csv").exists());
}

#[test]
fn usage_mistakes_exit_with_code_two() {
    for args in [
        &["frobnicate"][..],
        &["run"][..],
        &["run", "builtin:example1", "--what"][..],
        &["metrics", "somefile.csv"][..],
        &[][..],
    ] {
        let out = run_cli(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        let stderr = stderr_of(&out);
        assert!(stderr.contains("usage:"), "args {args:?}: {stderr}");
    }
    let out = run_cli(&["help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("usage:"));
}

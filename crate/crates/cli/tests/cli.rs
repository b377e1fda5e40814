use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn delaylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaylab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let fig2 = scenario("fig2.scenario");
    let out = delaylab(&[
        "run",
        fig2.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("verdict         CertifiedStable"));
    assert!(text.contains("classification  Converged"));
    for f in [
        "trajectory.csv",
        "lyapunov.csv",
        "margin.csv",
        "report.txt",
        "plot.svg",
        "scenario.toml",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn short_horizon_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let fig2 = scenario("fig2.scenario");
    let out = delaylab(&[
        "--t-end",
        "5",
        "run",
        fig2.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(12));
}

#[test]
fn step_override_is_reported_when_snapped() {
    let dir = tempfile::tempdir().unwrap();
    let fig2 = scenario("fig2.scenario");
    let out = delaylab(&[
        "run",
        fig2.to_str().unwrap(),
        "--step",
        "0.007",
        "--t-end",
        "60",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("snapped from 0.007"));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("step_snapped_from = 0.007"));
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let ok = delaylab(&["check", scenario("fig2.scenario").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let not = delaylab(&["check", scenario("fig1.scenario").to_str().unwrap()]);
    assert_eq!(not.status.code(), Some(20));
    assert!(stdout(&not).contains("NotCertified"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = delaylab(&[
        "sweep",
        scenario("fig2.scenario").to_str().unwrap(),
        "--param",
        "b",
        "--values",
        "0.2,-1,0.8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("value,status,"));
    assert!(lines[1].starts_with("0.2,ok,"));
    assert!(lines[2].starts_with("-1.0,error,"));
    assert!(lines[3].starts_with("0.8,ok,"));
    assert!(stdout(&out).contains("certification lost between 0.2 and 0.8"));
}

#[test]
fn errors_map_to_exit_classes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = delaylab(&["run", dir.path().join("none.scenario").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(66));

    let bad = dir.path().join("bad.scenario");
    std::fs::write(
        &bad,
        "[model]\nkappa = 1\na = 1.5\nb = 0.2\ntau = 3\nT_delay = 2\nspeed = 4\n",
    )
    .unwrap();
    let parse = delaylab(&["check", bad.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(65));
    let err = String::from_utf8_lossy(&parse.stderr);
    assert!(err.contains("bad.scenario:7"), "{err}");

    let usage = delaylab(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(64));

    let param = delaylab(&[
        "sweep",
        scenario("fig2.scenario").to_str().unwrap(),
        "--param",
        "gamma",
        "--values",
        "1",
    ]);
    assert_eq!(param.status.code(), Some(65));
}

use std::path::Path;
use std::process::{Command, Output};

fn semcom(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semcom"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = semcom(
        &[
            "simulate", "--policy", "psnr_max", "--slots", "20", "--out", "run",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("run/records.csv").is_file());
    assert!(dir.path().join("run/summary.json").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("latency 151.00 ms"));
}

#[test]
fn committed_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let out = semcom(
        &[
            "bench",
            "--config",
            config.to_str().unwrap(),
            "--slots",
            "10",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "alpha = -1\n").unwrap();
    for args in [
        &["simulate", "--policy", "drl_sac"][..],
        &["simulate", "--config", "bad.toml"],
        &["sweep", "--parameter", "beta", "--value", "1"],
        &["sweep", "--parameter", "alpha", "--value", "x"],
    ] {
        let out = semcom(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn runtime_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = semcom(
        &["simulate", "--slots", "2", "--out", "blocker/run"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = semcom(&["simulate", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

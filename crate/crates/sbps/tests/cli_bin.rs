//! End-to-end checks of the `sbps` binary: the run/scan/diag surface, file
//! outputs, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sbps"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sbps_bin_{name}"));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_then_diag_produces_all_artifacts() {
    let dir = temp_dir("run_diag");
    let out = bin()
        .args([
            "run",
            "--set",
            "dim=4",
            "--set",
            "n_data=80",
            "--set",
            "batch_size=8",
            "--set",
            "epochs=3",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("trajectory.csv").exists());
    assert!(dir.join("summary.json").exists());

    let out = bin()
        .args(["diag", "--max-lag", "20", "--points", "1000", "--trajectory"])
        .arg(dir.join("trajectory.csv"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("diagnostics.json").exists());
    assert!(dir.join("nll_trace.svg").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validation_errors_exit_one() {
    let dir = temp_dir("validation");
    let out = bin()
        .args(["run", "--set", "batch_size=5000", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["run", "--set", "no_such_key=1", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scan_writes_a_table() {
    let dir = temp_dir("scan");
    let out = bin()
        .args([
            "scan",
            "--set",
            "dim=3",
            "--set",
            "n_data=60",
            "--set",
            "epochs=2",
            "--axis",
            "k",
            "--values",
            "1,3",
            "--seeds",
            "2",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    assert!(table.lines().count() >= 3, "table:\n{table}");
    assert!(table.starts_with("axis,value,completed"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_with_overrides() {
    let dir = temp_dir("config_file");
    let config_path = dir.join("run.cfg");
    std::fs::write(
        &config_path,
        "# benchmark, scaled down\nsampler = sgld\ndim = 3\nn_data = 50\nbatch_size = 10\nsteps = 40\nstep_size = 0.001\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config_path)
        .args(["--set", "steps=20", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"steps\": 20"));
    assert!(summary.contains("\"sampler\": \"sgld\""));
    std::fs::remove_dir_all(&dir).ok();
}

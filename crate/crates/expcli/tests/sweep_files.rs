use std::fs;
use std::path::Path;
use std::process::Command;

use netmfc::orchestrator::{Architecture, ExperimentConfig};
use netmfc_exp::sweep::{read_checkpoint, OutputOptions};
use netmfc_exp::{read_metrics, run_sweep, SweepSpec};

fn small() -> ExperimentConfig {
    ExperimentConfig {
        height: 4,
        width: 4,
        population: 5,
        iterations: 3,
        collect_steps: 4,
        train_steps: 3,
        eval_steps: 2,
        hidden_width: 8,
        ..ExperimentConfig::default()
    }
}

#[test]
fn one_run_gives_k_rows() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&SweepSpec::single(small(), dir.path())).unwrap();
    assert!(report.all_ok());
    let rows = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(rows.iter().all(|r| r.wall_ms == 0.0 && r.radius == "1.0"));
}

#[test]
fn two_seeds_two_architectures_four_sections() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::single(small(), dir.path());
    spec.architectures = vec![Architecture::Networked, Architecture::Independent];
    spec.seeds = vec![4, 9];
    let report = run_sweep(&spec).unwrap();
    assert_eq!(report.runs.len(), 4);
    let rows = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 4 * 3);
    let sections: Vec<(String, u64)> = rows
        .chunks(3)
        .map(|c| (c[0].architecture.clone(), c[0].seed))
        .collect();
    assert_eq!(
        sections,
        [
            ("networked".to_string(), 4),
            ("networked".to_string(), 9),
            ("independent".to_string(), 4),
            ("independent".to_string(), 9),
        ]
    );
    for run in &report.runs {
        let per_run = read_metrics(&dir.path().join(run.file.as_ref().unwrap())).unwrap();
        assert_eq!(per_run.len(), 3);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["runs"][3]["config"]["seed"], 9);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::single(small(), a.path());
    spec.seeds = vec![0, 1];
    run_sweep(&spec).unwrap();
    spec.output_dir = b.path().to_path_buf();
    run_sweep(&spec).unwrap();
    let read = |d: &Path| fs::read(d.join("metrics.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn checkpoints_and_traces_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::single(small(), dir.path());
    spec.options = OutputOptions {
        record_wall_time: true,
        checkpoint_every: Some(2),
        trace_adoption: true,
    };
    run_sweep(&spec).unwrap();
    let ckpt = dir.path().join("checkpoints/run_0000/k_0001.txt");
    let nets = read_checkpoint(&ckpt).unwrap();
    assert_eq!(nets.len(), 5);
    assert_eq!(nets[0].widths(), small().network_widths());
    assert!(!dir.path().join("checkpoints/run_0000/k_0000.txt").exists());
    let trace = fs::read_to_string(dir.path().join("traces/run_0000_adoption.csv")).unwrap();
    // Header plus K × C_p × N records.
    assert_eq!(trace.lines().count(), 1 + 3 * 5);
    let rows = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert!(rows.iter().all(|r| r.wall_ms > 0.0));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netmfc-exp"))
}

#[test]
fn binary_runs_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args([
            "--height", "3", "--width", "3", "-n", "4", "-K", "2", "-M", "3", "-L", "2", "-E", "2",
        ])
        .args([
            "--hidden-width",
            "4",
            "--arch",
            "networked,central_agent",
            "--seeds",
            "2",
        ])
        .env("MFC_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        read_metrics(&dir.path().join("metrics.csv")).unwrap().len(),
        2 * 2 * 2
    );
}

#[test]
fn binary_rejects_bad_values_with_nonzero_exit() {
    let out = cli()
        .args(["--link-failure-prob", "1.5", "--dump-config"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("link"));
    let out = cli().args(["--no-such-flag"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn binary_dumps_resolved_config() {
    let out = cli()
        .args(["--preset", "desk", "--game", "beach_bar"])
        .arg("--dump-config")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let spec: SweepSpec = toml::from_str(&text).unwrap();
    assert_eq!(spec.base.population, 50);
    assert_eq!(spec.games.len(), 1);
    assert!(text.contains("beach_bar"));
}

#[test]
fn unwritable_output_fails_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    assert!(run_sweep(&SweepSpec::single(small(), &blocker)).is_err());
}

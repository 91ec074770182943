use std::process::Command;

use acscp_core::engine::run_episode;
use acscp_core::harness::experiment::{efficiency_table, episodes_table, exposure_table};
use acscp_core::harness::{
    export_field_snapshots, parse_spec, read_log, run_experiment, snapshot_at, verify_log, write_log, write_outputs,
    ExperimentSpec, SnapshotTime,
};
use acscp_core::metrics::evaluate_episode;
use acscp_core::Error;

const SMALL: &str = r#"
grid.side_count = 5
threat.N_P = 9
experiment.schemes = ["crmi:zero:1", "near:auto:1"]
experiment.ratios = [5, 10]
experiment.seeds = [3, 4]
"#;

fn small_spec(extra: &[&str]) -> ExperimentSpec {
    let overrides: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    parse_spec(SMALL, &overrides).unwrap()
}

#[test]
fn single_cell_experiment() {
    let spec = small_spec(&["experiment.schemes=[\"only:auto:1\"]", "experiment.ratios=[5]", "experiment.seeds=1"]);
    let result = run_experiment(&spec).unwrap();
    assert_eq!(result.records.len(), 1);
    assert_eq!(result.exposure.len(), 1);
    assert_eq!(result.efficiency.len(), 1);
    let table = exposure_table(&result);
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn table_means_are_per_episode_means() {
    let spec = small_spec(&[]);
    let result = run_experiment(&spec).unwrap();
    assert_eq!(result.records.len(), 2 * 2 * 2);
    for cell in &result.exposure {
        let values: Vec<f64> = result
            .records_for(&cell.scheme, cell.ratio)
            .filter_map(|r| r.summary.exposure)
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((cell.mean.unwrap() - mean).abs() < 1e-12);
    }
    for row in &result.efficiency {
        let group: Vec<_> = result.records_for(&row.scheme, 5.0).collect();
        let s = group.iter().map(|r| r.summary.placements as f64).sum::<f64>() / group.len() as f64;
        assert_eq!(row.mean_placements, s);
        // every stored η is exposure · U / S
        for r in &group {
            let e = r.summary.exposure.unwrap() * r.summary.unique_placements as f64 / r.summary.placements as f64;
            assert_eq!(r.summary.efficiency.unwrap(), e);
        }
    }
}

#[test]
fn experiments_are_deterministic_across_worker_counts() {
    let one = run_experiment(&small_spec(&["experiment.workers=1"])).unwrap();
    let two = run_experiment(&small_spec(&["experiment.workers=2"])).unwrap();
    assert_eq!(exposure_table(&one), exposure_table(&two));
    assert_eq!(efficiency_table(&one), efficiency_table(&two));
    assert_eq!(episodes_table(&one), episodes_table(&two));
}

#[test]
fn outputs_are_written_and_logs_verify() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(&["experiment.seeds=1"]);
    let result = run_experiment(&spec).unwrap();
    let written = write_outputs(&result, dir.path()).unwrap();
    assert_eq!(written.len(), 3 + result.records.len());
    let exposure = std::fs::read_to_string(dir.path().join("summary_exposure.csv")).unwrap();
    assert!(exposure.starts_with("# acscp-summary-exposure v1\n"));

    let log_path = dir.path().join("logs").join("near_r5_s0.log.json");
    let log = read_log(&log_path).unwrap();
    let report = verify_log(&log).unwrap();
    assert!(report.is_ok(), "{:?}", report.mismatches);
    assert_eq!(Some(report.recomputed), log.summary);
}

#[test]
fn tampered_logs_fail_verification() {
    let spec = small_spec(&[]);
    let mut log = run_episode(spec.episode_config(&spec.schemes[0], 5.0, 0)).unwrap();
    log.summary = Some(evaluate_episode(&log).unwrap());
    log.placements += 1;
    let report = verify_log(&log).unwrap();
    assert!(!report.is_ok());
    assert!(report.mismatches.iter().any(|m| m.starts_with("S:")));
}

#[test]
fn malformed_logs_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.log.json");
    std::fs::write(&path, "{}\n").unwrap();
    assert!(matches!(read_log(&path), Err(Error::Format { .. })));
    assert!(matches!(read_log(&dir.path().join("missing")), Err(Error::Io { .. })));
}

#[test]
fn snapshots_follow_the_log() {
    let spec = small_spec(&[]);
    let log = run_episode(spec.episode_config(&spec.schemes[1], 5.0, 0)).unwrap();

    let start = snapshot_at(&log, SnapshotTime::Start).unwrap();
    assert!(start.estimated.iter().all(|&c| c == 1.0));
    assert!(start.planned.is_empty());

    let end = snapshot_at(&log, SnapshotTime::End).unwrap();
    assert_eq!(end.traveled, log.traveled());
    assert!(end.planned.is_empty());

    // at a replan instant the planned route is the one recorded, and the
    // estimate is the recorded mean
    let replan = log.replans.iter().rev().find(|r| r.tick > 0).unwrap();
    let last_at_tick = log.replans.iter().rev().find(|r| r.tick == replan.tick).unwrap();
    let mid = snapshot_at(&log, SnapshotTime::Tick(replan.tick)).unwrap();
    assert_eq!(mid.planned, last_at_tick.path);

    assert!(matches!(
        snapshot_at(&log, SnapshotTime::Tick(log.final_tick() + 1)),
        Err(Error::InvalidArgument(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    let files = export_field_snapshots(&log, &[SnapshotTime::Start, SnapshotTime::End], dir.path()).unwrap();
    assert_eq!(files.len(), 6);
    let field = std::fs::read_to_string(dir.path().join("field_end.csv")).unwrap();
    assert_eq!(field.lines().count(), 2 + 25);
}

#[test]
fn snapshot_estimate_matches_live_belief() {
    use acscp_core::engine::Episode;
    let spec = small_spec(&[]);
    let cfg = spec.episode_config(&spec.schemes[1], 5.0, 0);
    let mut episode = Episode::initialize(cfg).unwrap();
    for _ in 0..37 {
        episode.tick().unwrap();
    }
    let grid = episode.scenario().grid.clone();
    let basis = episode.scenario().basis.clone();
    let live: Vec<f64> = grid
        .coords()
        .iter()
        .map(|x| 1.0 + basis.basis_vector(x).dot(&episode.belief().mean))
        .collect();
    let snap = snapshot_at(episode.log(), SnapshotTime::Tick(37)).unwrap();
    for (a, b) in snap.estimated.iter().zip(&live) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
}

fn acscp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acscp"))
}

#[test]
fn cli_run_verify_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.toml");
    std::fs::write(&spec_path, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = acscp()
        .args(["run", spec_path.to_str().unwrap(), "--set", "experiment.seeds=1", "--set", "experiment.ratios=[5]"])
        .args(["--out", out.to_str().unwrap(), "--workers", "1"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("summary_efficiency.csv").exists());

    let log = out.join("logs").join("crmi_r5_s0.log.json");
    let verify = acscp().args(["verify", log.to_str().unwrap()]).output().unwrap();
    assert!(verify.status.success());
    assert!(String::from_utf8_lossy(&verify.stdout).starts_with("ok:"));

    let snaps = dir.path().join("snaps");
    let snap = acscp()
        .args(["snapshot", log.to_str().unwrap(), "--times", "start,5,end", "--out", snaps.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(snap.status.success());
    assert!(snaps.join("path_t5.csv").exists());

    // tamper with the stored counts
    let mut parsed = read_log(&log).unwrap();
    parsed.unique_placements += 1;
    write_log(&log, &parsed).unwrap();
    let verify = acscp().args(["verify", log.to_str().unwrap()]).output().unwrap();
    assert!(!verify.status.success());
    assert!(String::from_utf8_lossy(&verify.stderr).starts_with("error[verify]: U:"));
}

#[test]
fn cli_errors_are_categorized() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.toml");
    std::fs::write(&spec_path, "grid.bogus = 1\n").unwrap();
    let out = acscp().args(["run", spec_path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]:"));

    let out = acscp().args(["verify", dir.path().join("none.json").to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]:"));
}

use std::fs;
use std::path::Path;

use ens_core::diagnostics::{CSV_COLUMNS, CSV_SCHEMA_VERSION};
use ens_core::scenario::{
    compute, run_scenario, run_sweep, ScenarioConfig, Summary, DIAGNOSTICS_FILE, PROFILE_BETAS, SUMMARY_FILE,
    SWEEP_SUMMARY_FILE,
};
use ens_core::snapshot::{read_snapshot, FieldKind};

fn small_perturbation(dir: &Path) -> ScenarioConfig {
    let mut c = ScenarioConfig::preset("theorem2-perturbation").unwrap();
    c.grid.n = 128;
    c.grid.box_len = 32.0;
    c.time.t1 = 2.0;
    c.output.directory = dir.to_path_buf();
    c.output.snapshot_every = 10;
    c
}

fn data_lines(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn seeded_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_scenario(&small_perturbation(&tmp.path().join("a"))).unwrap();
    let b = run_scenario(&small_perturbation(&tmp.path().join("b"))).unwrap();
    assert_eq!(a, b);
    let csv_a = fs::read(tmp.path().join("a").join(DIAGNOSTICS_FILE)).unwrap();
    let csv_b = fs::read(tmp.path().join("b").join(DIAGNOSTICS_FILE)).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b);

    let mut other = small_perturbation(&tmp.path().join("c"));
    other.ic.seed += 1;
    run_scenario(&other).unwrap();
    assert_ne!(fs::read(tmp.path().join("c").join(DIAGNOSTICS_FILE)).unwrap(), csv_a);
}

#[test]
fn diagnostics_csv_follows_versioned_schema() {
    let tmp = tempfile::tempdir().unwrap();
    run_scenario(&small_perturbation(tmp.path())).unwrap();
    let csv = fs::read_to_string(tmp.path().join(DIAGNOSTICS_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# ens diagnostics schema v{CSV_SCHEMA_VERSION}"));
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows = data_lines(&csv);
    assert!(rows.len() > 3);
    let mut last_t = 0.0;
    for row in &rows {
        assert_eq!(row.len(), CSV_COLUMNS.len());
        let t: f64 = row[0].parse().unwrap();
        assert!(t > last_t);
        last_t = t;
        for cell in row {
            if !cell.is_empty() {
                assert!(cell.parse::<f64>().unwrap().is_finite(), "{cell}");
            }
        }
    }
    assert!((last_t - 2.0).abs() < 1e-12);
}

#[test]
fn run_writes_summary_config_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_perturbation(tmp.path());
    let summary = run_scenario(&config).unwrap();
    assert!(summary.passed, "{}", summary.to_toml_string());
    assert_eq!(Summary::read(&tmp.path().join(SUMMARY_FILE)).unwrap(), summary);
    let echoed = ScenarioConfig::from_file(&tmp.path().join("config.toml"), &[]).unwrap();
    assert_eq!(echoed, config);
    assert!(summary.check("conservation").unwrap().pass);
    assert!(summary.check("initial_wp_w").is_some());

    let snaps = tmp.path().join("snapshots");
    let (meta, omega) = read_snapshot::<f64>(&snaps.join("snap_0000_omega.meta")).unwrap();
    assert_eq!(meta.kind, FieldKind::Omega);
    assert_eq!(meta.n, 128);
    assert_eq!(omega.values().len(), 128 * 128);
    let (dmeta, _) = read_snapshot::<f64>(&snaps.join("snap_0000_d.meta")).unwrap();
    assert_eq!(dmeta.kind, FieldKind::Divergence);
    assert_eq!(dmeta.t, meta.t);
}

#[test]
fn runtime_failure_is_recorded_with_partial_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small_perturbation(tmp.path());
    c.grid.box_len = 24.0;
    c.time.t1 = 3.9;
    c.time.restart_rescale = false;
    let s = run_scenario(&c).unwrap();
    assert!(!s.passed);
    assert_eq!(s.exit_code(), 1);
    assert!(s.error.as_deref().unwrap().contains("weight blow-up"), "{:?}", s.error);
    let csv = fs::read_to_string(tmp.path().join(DIAGNOSTICS_FILE)).unwrap();
    assert!(!data_lines(&csv).is_empty());
    assert!(!Summary::read(&tmp.path().join(SUMMARY_FILE)).unwrap().passed);
}

#[test]
fn profile_scenario_exports_one_table_per_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::preset("ws-profile").unwrap();
    c.output.directory = tmp.path().to_path_buf();
    let s = run_scenario(&c).unwrap();
    assert!(s.passed, "{}", s.to_toml_string());
    let mut at_origin = Vec::new();
    for beta in PROFILE_BETAS {
        let text = fs::read_to_string(tmp.path().join(format!("ws_beta_{beta:.4}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,ws"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        at_origin.push(first[1]);
    }
    assert!(at_origin.windows(2).all(|w| w[1] < w[0]), "{at_origin:?}");
    let csv = fs::read_to_string(tmp.path().join(DIAGNOSTICS_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sweep_runs_each_value_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::preset("operator-suite").unwrap();
    c.grid.n = 128;
    c.output.directory = tmp.path().to_path_buf();
    let values = vec!["1".to_string(), "2".to_string()];
    let summaries = run_sweep(&c, "ic.seed", &values).unwrap();
    assert_eq!(summaries.len(), 2);
    for v in &values {
        let dir = tmp.path().join(format!("ic.seed={v}"));
        let echoed = ScenarioConfig::from_file(&dir.join("config.toml"), &[]).unwrap();
        assert_eq!(echoed.ic.seed.to_string(), *v);
        assert!(dir.join(SUMMARY_FILE).exists());
    }
    let record = fs::read_to_string(tmp.path().join(SWEEP_SUMMARY_FILE)).unwrap();
    assert!(record.contains("key = \"ic.seed\""));
    assert!(run_sweep(&c, "ic.sed", &values).is_err());
}

#[test]
fn compute_rejects_invalid_config() {
    let mut c = ScenarioConfig::preset("oseen-fixed-point").unwrap();
    c.time.t1 = c.time.t0;
    assert!(compute(&c).is_err());
    let tmp = tempfile::tempdir().unwrap();
    c.output.directory = tmp.path().join("never");
    assert!(run_scenario(&c).is_err());
    assert!(!c.output.directory.exists());
}

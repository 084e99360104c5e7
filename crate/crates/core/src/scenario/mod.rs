//! Named batch scenarios: configuration, execution and the on-disk
//! artifacts (`config.toml`, `diagnostics.csv`, `summary.toml`, extra
//! tables and optional snapshots) of one run.

mod config;
mod runs;
mod summary;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    parse_overrides, parse_value, parse_vary, GridConfig, IcConfig, OutputConfig, PhysicsConfig, ScenarioConfig,
    SweepConfig, TimeConfig, PROFILE_BETAS, SCENARIOS,
};
pub use runs::{band_limited_field, controls_of, Report, CONSERVATION_TOL, MONOTONE_SLACK};
pub use summary::{Check, Note, Summary};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{EnsError, Result};
use crate::snapshot::{write_snapshot, FieldKind};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const CONFIG_FILE: &str = "config.toml";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.toml";

/// Runs the scenario without touching the disk.
pub fn compute(config: &ScenarioConfig) -> Result<Report> {
    config.validate()?;
    match config.scenario.as_str() {
        "ws-profile" => runs::ws_profile(config),
        "oseen-fixed-point" => runs::oseen_fixed_point(config),
        "theorem1-relaxation" => runs::theorem1_relaxation(config),
        "theorem2-perturbation" => runs::theorem2_perturbation(config),
        "entropy-monitor" => runs::entropy_monitor(config),
        "operator-suite" => runs::operator_suite(config),
        other => Err(EnsError::Config(format!("unknown scenario '{other}'"))),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| EnsError::io(path, e))
}

/// Runs the scenario and writes its artifacts under `output.directory`.
///
/// Configuration errors are returned as `Err`; anything that goes wrong
/// after validation ends up in the summary with `passed = false`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Summary> {
    config.validate()?;
    let dir = &config.output.directory;
    fs::create_dir_all(dir).map_err(|e| EnsError::io(dir, e))?;
    write(&dir.join(CONFIG_FILE), &config.to_toml_string())?;
    let report = match compute(config) {
        Ok(r) => r,
        Err(e @ EnsError::Config(_)) => return Err(e),
        Err(e) => Report { error: Some(e.to_string()), ..Default::default() },
    };
    let csv = report.diagnostics.clone().unwrap_or_else(DiagnosticsRow::csv_header);
    write(&dir.join(DIAGNOSTICS_FILE), &csv)?;
    for (name, text) in &report.files {
        write(&dir.join(name), text)?;
    }
    if let Some(traj) = &report.trajectory {
        let snaps = dir.join("snapshots");
        for (k, s) in traj.snapshots.iter().enumerate() {
            write_snapshot(&snaps, &format!("snap_{k:04}_omega"), FieldKind::Omega, s.t, &s.omega)?;
            write_snapshot(&snaps, &format!("snap_{k:04}_d"), FieldKind::Divergence, s.t, &s.d)?;
        }
    }
    let summary = Summary::new(&config.scenario, report.checks, report.notes, report.error);
    summary.write(&dir.join(SUMMARY_FILE))?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    value: String,
    directory: PathBuf,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepRecord {
    key: String,
    passed: bool,
    #[serde(rename = "run")]
    runs: Vec<SweepEntry>,
}

/// Runs `config` once per value of `key`, in parallel, each into
/// `<directory>/<key>=<value>`; writes `sweep_summary.toml` in the base
/// directory. Configuration errors for any value abort before running.
pub fn run_sweep(config: &ScenarioConfig, key: &str, values: &[String]) -> Result<Vec<Summary>> {
    let base = config.output.directory.clone();
    let configs: Vec<(String, ScenarioConfig)> = values
        .iter()
        .map(|v| {
            let mut c = config.with_override(key, v)?;
            c.output.directory = base.join(format!("{key}={v}"));
            Ok((v.clone(), c))
        })
        .collect::<Result<_>>()?;
    let results: Vec<Result<Summary>> = configs.par_iter().map(|(_, c)| run_scenario(c)).collect();
    let mut summaries = Vec::with_capacity(results.len());
    let mut runs = Vec::with_capacity(results.len());
    for ((value, c), res) in configs.into_iter().zip(results) {
        let s = res?;
        runs.push(SweepEntry { value, directory: c.output.directory, passed: s.passed, error: s.error.clone() });
        summaries.push(s);
    }
    let record = SweepRecord { key: key.to_string(), passed: runs.iter().all(|r| r.passed), runs };
    fs::create_dir_all(&base).map_err(|e| EnsError::io(&base, e))?;
    write(&base.join(SWEEP_SUMMARY_FILE), &toml::to_string(&record).expect("sweep record serializes"))?;
    Ok(summaries)
}

//! Config-driven scenarios: parse a TOML document, run the named pipeline,
//! write CSV/JSON artifacts and a manifest with content digests.

pub mod config;
pub mod manifest;
pub mod plots;
pub mod runs;
pub mod scenarios;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::diagnostics::records_to_csv;
use crate::error::{Error, Result};
use crate::persist::write_field;

pub use config::{Scenario, ScenarioConfig};
pub use manifest::{FileEntry, RunManifest, Timing, MANIFEST_SCHEMA_VERSION};
pub use plots::emit_plots;
pub use runs::{RunCache, Trajectory};
pub use scenarios::{analyze, Outcome};
pub use sweep::{parse_sweep, Sweep};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

/// Process exit status for an aborted run.
pub fn exit_status(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidGrid(_) | Error::Json(_) | Error::Io(_) => EXIT_CONFIG,
        Error::GuardViolation { .. } | Error::SupportOverflow(_) => EXIT_GUARD,
        _ => EXIT_NUMERICAL,
    }
}

pub fn default_output_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.scenario.name()))
}

/// Runs the scenario with a private run cache and writes its artifacts.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunManifest> {
    run_scenario_with(cfg, &RunCache::new())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, cache: &RunCache) -> Result<RunManifest> {
    cfg.validate()?;
    let started = Instant::now();
    let outcome = analyze(cfg, cache)?;
    let dir = default_output_dir(cfg);
    let manifest = write_outcome(cfg, outcome, &dir, started.elapsed().as_secs_f64())?;
    Ok(manifest)
}

/// Writes diagnostics, tables, states, the report and finally the manifest.
pub fn write_outcome(cfg: &ScenarioConfig, mut outcome: Outcome, dir: &Path, wall_seconds: f64) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut names = vec!["diagnostics.csv".to_string()];
    std::fs::write(dir.join("diagnostics.csv"), records_to_csv(&outcome.diagnostics))?;
    for (name, contents) in &outcome.tables {
        std::fs::write(dir.join(name), contents)?;
        names.push(name.clone());
    }
    if !outcome.states.is_empty() {
        std::fs::create_dir_all(dir.join("states"))?;
    }
    for (stem, field) in &outcome.states {
        let rel = format!("states/{stem}.csv");
        write_field(&dir.join(&rel), field)?;
        outcome.report.states.push(rel.clone());
        names.push(rel);
    }
    std::fs::write(dir.join("report.json"), outcome.report.to_json()?)?;
    names.push("report.json".into());
    names.sort();
    let files = names.iter().map(|n| FileEntry::for_file(dir, n)).collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        scenario: cfg.scenario.name().into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        output_dir: dir.to_path_buf(),
        config: cfg.clone(),
        timing: Timing { wall_seconds },
        passed: outcome.report.all_pass(),
        verdicts: outcome.report.verdicts.clone(),
        files,
    };
    std::fs::write(dir.join("manifest.json"), manifest.to_json()?)?;
    Ok(manifest)
}

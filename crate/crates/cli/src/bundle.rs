//! Output bundle: `<out>/<name>/{trajectory.csv, edges.csv, metrics.json, plot.svg, report.json}`.
//! `edges.csv` is only written when some agent is Byzantine. Nothing here
//! depends on wall-clock time, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rcl_core::export::{edges_csv, trajectory_csv};
use rcl_core::scenarios::ExpectedOutcome;
use rcl_core::simulation::{Metrics, SimConfig, Trajectory};
use rcl_core::{Error, Result};

use crate::plot;

#[derive(Debug, Serialize)]
pub struct MetricsFile<'a> {
    pub name: &'a str,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<&'a ExpectedOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_met: Option<bool>,
    #[serde(flatten)]
    pub metrics: &'a Metrics,
}

pub fn bundle_dir(out: &Path, name: &str) -> Result<PathBuf> {
    let dir = out.join(name);
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

pub fn write_file(dir: &Path, file: &str, contents: &str) -> Result<()> {
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

pub fn write_json(dir: &Path, file: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, file, &text)
}

/// Writes the trajectory artifacts and `metrics.json`; returns the metrics JSON text.
pub fn write_run(dir: &Path, config: &SimConfig, traj: &Trajectory, metrics: &MetricsFile) -> Result<String> {
    write_file(dir, "trajectory.csv", &trajectory_csv(traj))?;
    let edges = dir.join("edges.csv");
    if config.has_byzantine() {
        write_file(dir, "edges.csv", &edges_csv(traj, &config.graph))?;
    } else if edges.exists() {
        // stale file from an earlier run with a different config
        fs::remove_file(&edges).map_err(|source| Error::Io { path: edges, source })?;
    }
    write_file(dir, "plot.svg", &plot::render(traj, metrics.name))?;
    let mut text = serde_json::to_string_pretty(metrics)?;
    text.push('\n');
    write_file(dir, "metrics.json", &text)?;
    Ok(text)
}

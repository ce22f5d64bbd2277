//! Artifacts of a run: `<run-id>.csv`, `<run-id>.json` and `<run-id>.svg`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{Report, Subcommand};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot;

/// Everything known about a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub timestamp: String,
    pub subcommand: String,
    /// The effective configuration as TOML.
    pub input: String,
    pub summary: String,
    pub rows: Value,
    pub diagnostics: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub run_id: String,
    pub csv: PathBuf,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_artifacts(sub: Subcommand, cfg: &RunConfig, report: &Report) -> Result<Artifacts, CliError> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let run_id = cfg.run_id(sub.name());
    let csv = dir.join(format!("{run_id}.csv"));
    write(&csv, &report.csv)?;

    let json = if cfg.output.json {
        let record = ResultRecord {
            run_id: run_id.clone(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            subcommand: sub.name().into(),
            input: cfg.to_toml(),
            summary: report.summary.clone(),
            rows: report.rows.clone(),
            diagnostics: report.diagnostics.clone(),
        };
        let path = dir.join(format!("{run_id}.json"));
        let text = serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::Validation(format!("cannot encode result record: {e}")))?;
        write(&path, text.as_bytes())?;
        Some(path)
    } else {
        None
    };

    let svg = match (&report.plot, cfg.output.svg) {
        (Some((curves, style)), true) => {
            let path = dir.join(format!("{run_id}.svg"));
            plot::emit_plot(curves, style, &path)?;
            Some(path)
        }
        _ => None,
    };

    Ok(Artifacts { run_id, csv, json, svg })
}

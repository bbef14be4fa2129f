// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON artifacts for experiment and latency reports.
//!
//! Floats are written in shortest round-trip form, so re-importing a file
//! recovers every value bit for bit and re-exporting it is byte-identical.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::latency::LatencyReport;
use super::prequential::{Arm, ExperimentReport};
use super::EvalError;
use crate::drift::{feature_name, DriftEvent};

pub const SERIES_COLUMNS: [&str; 5] = [
    "event_index",
    "arm",
    "rolling_accuracy",
    "rolling_auc",
    "auc_degenerate",
];
pub const DRIFT_COLUMNS: [&str; 3] = ["index", "class_context", "feature"];
pub const LATENCY_COLUMNS: [&str; 4] = ["model", "static_ms", "online_ms", "overhead_ms"];
pub const RAW_LATENCY_COLUMNS: [&str; 5] = ["model", "mode", "trial", "event", "nanos"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// One line of the metric series file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub event_index: usize,
    pub arm: Arm,
    pub rolling_accuracy: f64,
    pub rolling_auc: f64,
    pub auc_degenerate: bool,
}

/// Series rows ordered by event, static arm first at each index.
pub fn series_rows(report: &ExperimentReport) -> Vec<SeriesRow> {
    let mut rows = Vec::with_capacity(report.static_series.len() * 2);
    for (s, o) in report.static_series.iter().zip(&report.online_series) {
        for (arm, p) in [(Arm::Static, s), (Arm::Online, o)] {
            rows.push(SeriesRow {
                event_index: p.event_index,
                arm,
                rolling_accuracy: p.accuracy,
                rolling_auc: p.auc,
                auc_degenerate: p.auc_degenerate,
            });
        }
    }
    rows
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl fmt::Display) -> EvalError {
    EvalError::Format {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), EvalError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| format_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), EvalError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| format_err(path, e))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, EvalError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

pub fn write_series(path: &Path, rows: &[SeriesRow], format: ExportFormat) -> Result<(), EvalError> {
    match format {
        ExportFormat::Json => write_json(path, rows),
        ExportFormat::Csv => write_rows(
            path,
            &SERIES_COLUMNS,
            rows.iter().map(|r| {
                vec![
                    r.event_index.to_string(),
                    r.arm.to_string(),
                    r.rolling_accuracy.to_string(),
                    r.rolling_auc.to_string(),
                    u8::from(r.auc_degenerate).to_string(),
                ]
            }),
        ),
    }
}

pub fn read_series(path: &Path, format: ExportFormat) -> Result<Vec<SeriesRow>, EvalError> {
    if format == ExportFormat::Json {
        return read_json(path);
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let header = r.headers().map_err(|e| format_err(path, e))?.clone();
    if header.iter().ne(SERIES_COLUMNS) {
        return Err(format_err(path, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let bad = |what: &str| format_err(path, format!("row {}: bad {what}", i + 1));
        let num = |j: usize, what: &str| rec[j].parse::<f64>().map_err(|_| bad(what));
        rows.push(SeriesRow {
            event_index: rec[0].parse().map_err(|_| bad("event_index"))?,
            arm: match &rec[1] {
                "static" => Arm::Static,
                "online" => Arm::Online,
                _ => return Err(bad("arm")),
            },
            rolling_accuracy: num(2, "rolling_accuracy")?,
            rolling_auc: num(3, "rolling_auc")?,
            auc_degenerate: match &rec[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("auc_degenerate")),
            },
        });
    }
    Ok(rows)
}

/// Drift overlay; header only when there are no events.
pub fn write_drift_csv(path: &Path, events: &[DriftEvent]) -> Result<(), EvalError> {
    write_rows(
        path,
        &DRIFT_COLUMNS,
        events.iter().map(|d| {
            vec![
                d.index.to_string(),
                d.class_context.as_str().to_string(),
                feature_name(d.feature).to_string(),
            ]
        }),
    )
}

pub fn write_latency_table(path: &Path, report: &LatencyReport, format: ExportFormat) -> Result<(), EvalError> {
    match format {
        ExportFormat::Json => write_json(path, &report.rows),
        ExportFormat::Csv => write_rows(
            path,
            &LATENCY_COLUMNS,
            report.rows.iter().map(|r| {
                vec![
                    r.model.to_string(),
                    r.static_ms.to_string(),
                    r.online_ms.to_string(),
                    r.overhead_ms.to_string(),
                ]
            }),
        ),
    }
}

/// Raw per-event nanoseconds; always CSV because of its size.
pub fn write_latency_raw(path: &Path, report: &LatencyReport) -> Result<(), EvalError> {
    write_rows(
        path,
        &RAW_LATENCY_COLUMNS,
        report.raw.iter().map(|s| {
            vec![
                s.model.to_string(),
                s.mode.to_string(),
                s.trial.to_string(),
                s.event.to_string(),
                s.nanos.to_string(),
            ]
        }),
    )
}

/// Files written for one model's experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub series: PathBuf,
    pub drift: PathBuf,
    pub summary: PathBuf,
}

/// Writes `<model>_series.<ext>`, `<model>_drift.csv` and
/// `<model>_summary.json` into `dir`.
pub fn export_report(report: &ExperimentReport, dir: &Path, format: ExportFormat) -> Result<ReportFiles, EvalError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let model = report.summary.model;
    let files = ReportFiles {
        series: dir.join(format!("{model}_series.{}", format.extension())),
        drift: dir.join(format!("{model}_drift.csv")),
        summary: dir.join(format!("{model}_summary.json")),
    };
    write_series(&files.series, &series_rows(report), format)?;
    write_drift_csv(&files.drift, &report.drift)?;
    write_json(&files.summary, &report.summary)?;
    Ok(files)
}

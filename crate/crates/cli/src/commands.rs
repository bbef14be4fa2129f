// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use optidrift::drift::detect_drifts_per_class;
use optidrift::evaluation::export::{write_drift_csv, write_json, write_latency_raw, write_latency_table};
use optidrift::evaluation::{
    export_report, latency_benchmark, prequential_run, pretrain, ExportFormat, LatencyReport, PrequentialOptions,
    Summary,
};
use optidrift::learners::Model;
use optidrift::seed;
use optidrift::stream::{generate_synthetic, write_csv, PreparedStream};
use optidrift::telemetry::{Segment, OSNR_RX_INDEX};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
}

fn write_manifest(cfg: &ExperimentConfig, command: &str) -> Result<PathBuf, CliError> {
    let path = cfg.out_dir.join(format!("{command}_manifest.json"));
    let m = Manifest {
        tool: "optidrift",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        config: cfg,
    };
    write_json(&path, &m)?;
    Ok(path)
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out_dir.display())))
}

fn prepare_stream(cfg: &ExperimentConfig) -> Result<PreparedStream, CliError> {
    Ok(cfg.stream.prepare(cfg.seed)?)
}

fn build(cfg: &ExperimentConfig, kind: optidrift::learners::ModelKind) -> Result<Model, CliError> {
    Model::build(kind, &cfg.params, seed::derive(cfg.seed, seed::BAGGING)).map_err(|e| CliError::Config(e.to_string()))
}

fn options(cfg: &ExperimentConfig, injection_index: Option<usize>) -> PrequentialOptions {
    PrequentialOptions {
        window: cfg.window,
        window_mode: cfg.window_mode,
        epochs: cfg.epochs,
        shuffle_seed: seed::derive(cfg.seed, seed::SHUFFLE),
        drift: Some(cfg.drift),
        injection_index,
        ..Default::default()
    }
}

/// What a command produced; printed unless `--quiet`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Run {
        summaries: Vec<Summary>,
        files: Vec<PathBuf>,
    },
    Drift {
        events: usize,
        files: Vec<PathBuf>,
    },
    Bench {
        rows: Vec<optidrift::evaluation::LatencyRow>,
        files: Vec<PathBuf>,
    },
    Gen {
        sfd_events: usize,
        hfd_events: usize,
        files: Vec<PathBuf>,
    },
}

impl Outcome {
    pub fn render(&self, format: ExportFormat) -> String {
        if format == ExportFormat::Json {
            return serde_json::to_string_pretty(self).expect("outcome serializes") + "\n";
        }
        let mut out = String::new();
        match self {
            Outcome::Run { summaries, .. } => {
                out.push_str("model,static_final_accuracy,static_final_auc,online_final_accuracy,online_final_auc,max_gap,max_relative_gap\n");
                for s in summaries {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        s.model,
                        s.static_arm.final_accuracy,
                        s.static_arm.final_auc,
                        s.online_arm.final_accuracy,
                        s.online_arm.final_auc,
                        s.max_gap,
                        s.max_relative_gap
                    ));
                }
            }
            Outcome::Drift { events, .. } => out.push_str(&format!("drift_events,{events}\n")),
            Outcome::Bench { rows, .. } => {
                out.push_str("model,static_ms,online_ms,overhead_ms\n");
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        r.model, r.static_ms, r.online_ms, r.overhead_ms
                    ));
                }
            }
            Outcome::Gen {
                sfd_events, hfd_events, ..
            } => out.push_str(&format!("sfd_events,{sfd_events}\nhfd_events,{hfd_events}\n")),
        }
        out
    }
}

/// Pretrain, stream and export every selected model.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    prepare_out(cfg)?;
    let stream = prepare_stream(cfg)?;
    let opts = options(cfg, stream.injection_index);
    let mut summaries = Vec::new();
    let mut files = Vec::new();
    for &kind in &cfg.models {
        let out = prequential_run(build(cfg, kind)?, build(cfg, kind)?, &stream.sfd, &stream.hfd, &opts)?;
        let written = export_report(&out.report, &cfg.out_dir, cfg.format)?;
        files.extend([written.series, written.drift, written.summary]);
        summaries.push(out.report.summary);
    }
    let summary_path = cfg.out_dir.join("summary.json");
    write_json(&summary_path, &summaries)?;
    files.push(summary_path);
    files.push(write_manifest(cfg, "run")?);
    Ok(Outcome::Run { summaries, files })
}

/// Per-class Page-Hinkley alarms on receiver OSNR over SFD followed by HFD.
pub fn cmd_drift(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    prepare_out(cfg)?;
    let stream = prepare_stream(cfg)?;
    let merged = stream.merged()?;
    let events =
        detect_drifts_per_class(&merged, OSNR_RX_INDEX, cfg.drift).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = cfg.out_dir.join("drift_events.csv");
    write_drift_csv(&path, &events)?;
    Ok(Outcome::Drift {
        events: events.len(),
        files: vec![path, write_manifest(cfg, "drift")?],
    })
}

/// Benchmarks each selected model after pretraining on SFD, using HFD as
/// the sample stream.
pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    prepare_out(cfg)?;
    let stream = prepare_stream(cfg)?;
    let shuffle = seed::derive(cfg.seed, seed::SHUFFLE);
    let mut models = Vec::new();
    for &kind in &cfg.models {
        let mut m = build(cfg, kind)?;
        pretrain(&mut m, &stream.sfd, cfg.epochs, shuffle)?;
        models.push(m);
    }
    let report: LatencyReport = latency_benchmark(&models, &stream.hfd, cfg.latency)?;
    let table = cfg.out_dir.join(format!("latency.{}", cfg.format.extension()));
    let raw = cfg.out_dir.join("latency_raw.csv");
    write_latency_table(&table, &report, cfg.format)?;
    write_latency_raw(&raw, &report)?;
    Ok(Outcome::Bench {
        rows: report.rows,
        files: vec![table, raw, write_manifest(cfg, "bench")?],
    })
}

/// Materialises the synthetic stream as `sfd.csv` and `hfd.csv`.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let synth = cfg
        .stream
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("field `stream.synth`: gen needs a synthetic stream".into()))?;
    prepare_out(cfg)?;
    let all = generate_synthetic(synth, seed::derive(cfg.seed, seed::GENERATOR))?;
    let (sfd, hfd): (Vec<_>, Vec<_>) = all.into_iter().partition(|e| e.segment == Segment::Sfd);
    let sfd_path = cfg.out_dir.join("sfd.csv");
    let hfd_path = cfg.out_dir.join("hfd.csv");
    write_csv(&sfd_path, &sfd)?;
    write_csv(&hfd_path, &hfd)?;
    Ok(Outcome::Gen {
        sfd_events: sfd.len(),
        hfd_events: hfd.len(),
        files: vec![sfd_path, hfd_path, write_manifest(cfg, "gen")?],
    })
}

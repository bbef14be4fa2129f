// SPDX-License-Identifier: MIT OR Apache-2.0

//! Prequential comparison of a frozen and a continuously updated model,
//! windowed metrics, latency benchmarking and report export.

pub mod export;
pub mod latency;
pub mod metrics;
pub mod prequential;

use thiserror::Error;

use crate::drift::DriftError;
use crate::learners::ModelError;

pub use export::{export_report, read_series, series_rows, write_series, ExportFormat, ReportFiles, SeriesRow};
pub use latency::{latency_benchmark, LatencyOptions, LatencyReport, LatencyRow, RawSample};
pub use metrics::{metric_series, rolling_accuracy, rolling_auc, Auc, MetricPoint, RollingWindow, Scored, WindowMode};
pub use prequential::{
    prequential_run, pretrain, Arm, ArmSummary, EventRecord, ExperimentReport, PrequentialOptions, PrequentialOutcome,
    Summary,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric window is empty")]
    EmptyWindow,
    #[error("stream is empty")]
    EmptyStream,
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
    #[error("{arm} arm failed at stream index {index}: {source}")]
    Model {
        arm: prequential::Arm,
        index: usize,
        source: ModelError,
    },
    #[error("pretraining failed at event {index}: {source}")]
    Pretrain { index: usize, source: ModelError },
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl PartialEq for EvalError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use optidrift::drift::PageHinkleyParams;
use optidrift::evaluation::{ExportFormat, LatencyOptions, WindowMode};
use optidrift::learners::{ModelKind, ModelParams};
use optidrift::stream::{StreamConfig, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a command needs. Loaded from a JSON file, then selectively
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamConfig,
    pub models: Vec<ModelKind>,
    pub params: ModelParams,
    /// Per-class detector on receiver OSNR.
    pub drift: PageHinkleyParams,
    pub window: usize,
    pub window_mode: WindowMode,
    /// Passes over the shuffled SFD during pretraining.
    pub epochs: usize,
    pub latency: LatencyOptions,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: ExportFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            stream: StreamConfig::synthetic(SynthConfig::default()),
            models: ModelKind::ALL.to_vec(),
            params: ModelParams::default(),
            drift: PageHinkleyParams::default(),
            window: 500,
            window_mode: WindowMode::Sliding,
            epochs: 1,
            latency: LatencyOptions::default(),
            seed: 42,
            out_dir: PathBuf::from("out"),
            format: ExportFormat::Csv,
        }
    }
}

/// Values given on the command line; each replaces its config key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<ExportFormat>,
    pub models: Option<Vec<ModelKind>>,
    pub window: Option<usize>,
    pub trials: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("field `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(m) = &o.models {
            self.models = m.clone();
        }
        if let Some(w) = o.window {
            self.window = w;
        }
        if let Some(t) = o.trials {
            self.latency.trials = t;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if self.models.is_empty() {
            return bad("models", "at least one model is required".into());
        }
        let unique: BTreeSet<_> = self.models.iter().collect();
        if unique.len() != self.models.len() {
            return bad("models", "duplicate entries".into());
        }
        if self.window == 0 {
            return bad("window", "must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs", "must be positive".into());
        }
        if self.latency.trials == 0 {
            return bad("latency.trials", "must be positive".into());
        }
        if self.latency.events_per_trial == 0 {
            return bad("latency.events_per_trial", "must be positive".into());
        }
        if let Err(e) = self.drift.check() {
            return bad("drift", e.to_string());
        }
        if let Err(e) = self.params.arf.check() {
            return bad("params.arf", e.to_string());
        }
        if !(self.params.lr.learning_rate.is_finite() && self.params.lr.learning_rate > 0.0) {
            return bad("params.lr.learning_rate", "must be positive".into());
        }
        if !(self.params.nb.min_variance.is_finite() && self.params.nb.min_variance > 0.0) {
            return bad("params.nb.min_variance", "must be positive".into());
        }
        self.stream.check().map_err(|e| CliError::Config(e.to_string()))
    }
}

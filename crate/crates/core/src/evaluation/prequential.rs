// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{metric_series, rolling_accuracy, MetricPoint, Scored, WindowMode};
use super::EvalError;
use crate::drift::{detect_drifts_per_class, DriftEvent, PageHinkleyParams};
use crate::learners::{Model, ModelKind, OnlineClassifier};
use crate::seed;
use crate::telemetry::{TelemetryEvent, OSNR_RX_INDEX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Static,
    Online,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Static => "static",
            Arm::Online => "online",
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    TestThenTrain,
    /// Broken ordering, kept only so tests can show the shipped order matters.
    TrainThenTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrequentialOptions {
    pub window: usize,
    pub window_mode: WindowMode,
    /// Passes over the shuffled pretraining set.
    pub epochs: usize,
    pub shuffle_seed: u64,
    /// Detector for the per-class drift overlay on `osnr_rx`; `None` skips it.
    pub drift: Option<PageHinkleyParams>,
    /// Stream index where oversampled failures begin, carried into the report.
    pub injection_index: Option<usize>,
    #[serde(skip)]
    #[doc(hidden)]
    pub order: UpdateOrder,
}

impl Default for PrequentialOptions {
    fn default() -> Self {
        PrequentialOptions {
            window: 500,
            window_mode: WindowMode::Sliding,
            epochs: 1,
            shuffle_seed: seed::derive(0, seed::SHUFFLE),
            drift: Some(PageHinkleyParams::default()),
            injection_index: None,
            order: UpdateOrder::TestThenTrain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_index: usize,
    pub label: u8,
    pub static_score: f64,
    pub online_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub final_accuracy: f64,
    pub final_auc: f64,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: ModelKind,
    pub stream_len: usize,
    pub window: usize,
    /// Accuracy of the pretrained model on the last `window` pretraining
    /// events in stream order.
    pub pre_drift_accuracy: f64,
    pub static_arm: ArmSummary,
    pub online_arm: ArmSummary,
    /// Largest `online − static` rolling accuracy, in accuracy units.
    pub max_gap: f64,
    pub max_gap_index: usize,
    /// Largest `(online − static) / static` over points with static > 0.
    pub max_relative_gap: f64,
    pub injection_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub summary: Summary,
    pub static_series: Vec<MetricPoint>,
    pub online_series: Vec<MetricPoint>,
    pub events: Vec<EventRecord>,
    pub drift: Vec<DriftEvent>,
}

impl ExperimentReport {
    pub fn series(&self, arm: Arm) -> &[MetricPoint] {
        match arm {
            Arm::Static => &self.static_series,
            Arm::Online => &self.online_series,
        }
    }
}

/// Models after the run, returned for inspection.
#[derive(Debug, Clone)]
pub struct PrequentialOutcome {
    pub report: ExperimentReport,
    pub static_model: Model,
    pub online_model: Model,
}

/// `epochs` passes of `learn_one` over `events`, reshuffled before each pass.
pub fn pretrain(
    model: &mut Model,
    events: &[TelemetryEvent],
    epochs: usize,
    shuffle_seed: u64,
) -> Result<(), EvalError> {
    let mut rng = seed::rng(shuffle_seed);
    let mut order: Vec<usize> = (0..events.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let e = &events[i];
            model
                .learn_one(&e.features(), e.label)
                .map_err(|source| EvalError::Pretrain { index: i, source })?;
        }
    }
    Ok(())
}

fn score_static(model: &Model, stream: &[TelemetryEvent]) -> Result<Vec<f64>, EvalError> {
    stream
        .iter()
        .enumerate()
        .map(|(t, e)| {
            model.score_one(&e.features()).map_err(|source| EvalError::Model {
                arm: Arm::Static,
                index: t,
                source,
            })
        })
        .collect()
}

fn score_online(model: &mut Model, stream: &[TelemetryEvent], order: UpdateOrder) -> Result<Vec<f64>, EvalError> {
    let mut scores = Vec::with_capacity(stream.len());
    for (t, e) in stream.iter().enumerate() {
        let err = |source| EvalError::Model {
            arm: Arm::Online,
            index: t,
            source,
        };
        let x = e.features();
        match order {
            UpdateOrder::TestThenTrain => {
                scores.push(model.score_one(&x).map_err(err)?);
                model.learn_one(&x, e.label).map_err(err)?;
            }
            UpdateOrder::TrainThenTest => {
                model.learn_one(&x, e.label).map_err(err)?;
                scores.push(model.score_one(&x).map_err(err)?);
            }
        }
    }
    Ok(scores)
}

fn arm_summary(series: &[MetricPoint]) -> ArmSummary {
    let last = series.last();
    let n = series.len().max(1) as f64;
    ArmSummary {
        final_accuracy: last.map_or(f64::NAN, |p| p.accuracy),
        final_auc: last.map_or(f64::NAN, |p| p.auc),
        mean_accuracy: series.iter().map(|p| p.accuracy).sum::<f64>() / n,
        min_accuracy: series.iter().map(|p| p.accuracy).fold(f64::INFINITY, f64::min),
    }
}

/// Pretrains both models identically on `pretrain`, then streams `stream`
/// through them: the static arm only scores, the online arm scores each
/// event and then learns its label.
pub fn prequential_run(
    static_model: Model,
    online_model: Model,
    pretrain_events: &[TelemetryEvent],
    stream: &[TelemetryEvent],
    opts: &PrequentialOptions,
) -> Result<PrequentialOutcome, EvalError> {
    if stream.is_empty() {
        return Err(EvalError::EmptyStream);
    }
    if opts.window == 0 {
        return Err(EvalError::InvalidConfig("window must be positive".into()));
    }
    if static_model.kind() != online_model.kind() {
        return Err(EvalError::InvalidConfig(
            "both arms must use the same model family".into(),
        ));
    }
    let kind = static_model.kind();
    let mut static_model = static_model;
    let mut online_model = online_model;
    pretrain(&mut static_model, pretrain_events, opts.epochs, opts.shuffle_seed)?;
    pretrain(&mut online_model, pretrain_events, opts.epochs, opts.shuffle_seed)?;

    let tail = &pretrain_events[pretrain_events.len().saturating_sub(opts.window)..];
    let pre_drift_accuracy = if tail.is_empty() {
        f64::NAN
    } else {
        let scored: Vec<Scored> = tail
            .iter()
            .map(|e| Ok(Scored::new(e.label, static_model.score_one(&e.features())?)))
            .collect::<Result<_, crate::learners::ModelError>>()
            .map_err(|source| EvalError::Model {
                arm: Arm::Static,
                index: 0,
                source,
            })?;
        rolling_accuracy(&scored)?
    };

    let (static_scores, online_scores) = std::thread::scope(|s| {
        let st = s.spawn(|| score_static(&static_model, stream));
        let on = s.spawn(|| score_online(&mut online_model, stream, opts.order));
        (
            st.join().expect("static arm panicked"),
            on.join().expect("online arm panicked"),
        )
    });
    let (static_scores, online_scores) = (static_scores?, online_scores?);

    let as_scored = |scores: &[f64]| -> Vec<Scored> {
        stream
            .iter()
            .zip(scores)
            .map(|(e, &s)| Scored::new(e.label, s))
            .collect()
    };
    let static_series = metric_series(&as_scored(&static_scores), opts.window, opts.window_mode)?;
    let online_series = metric_series(&as_scored(&online_scores), opts.window, opts.window_mode)?;

    let mut max_gap = f64::NEG_INFINITY;
    let mut max_gap_index = 0;
    let mut max_relative_gap = f64::NEG_INFINITY;
    for (s, o) in static_series.iter().zip(&online_series) {
        let gap = o.accuracy - s.accuracy;
        if gap > max_gap {
            max_gap = gap;
            max_gap_index = s.event_index;
        }
        if s.accuracy > 0.0 {
            max_relative_gap = max_relative_gap.max(gap / s.accuracy);
        }
    }

    // Detectors run over pretraining plus stream so the regime change at the
    // boundary is visible; only alarms inside the stream are kept, re-indexed
    // to stream positions.
    let drift = match opts.drift {
        Some(params) => {
            let offset = pretrain_events.len();
            let merged: Vec<TelemetryEvent> = pretrain_events.iter().chain(stream).cloned().collect();
            detect_drifts_per_class(&merged, OSNR_RX_INDEX, params)?
                .into_iter()
                .filter(|d| d.index >= offset)
                .map(|d| DriftEvent {
                    index: d.index - offset,
                    ..d
                })
                .collect()
        }
        None => Vec::new(),
    };

    let events = stream
        .iter()
        .enumerate()
        .map(|(t, e)| EventRecord {
            event_index: t,
            label: e.label.as_bit(),
            static_score: static_scores[t],
            online_score: online_scores[t],
        })
        .collect();

    let summary = Summary {
        model: kind,
        stream_len: stream.len(),
        window: opts.window,
        pre_drift_accuracy,
        static_arm: arm_summary(&static_series),
        online_arm: arm_summary(&online_series),
        max_gap,
        max_gap_index,
        max_relative_gap,
        injection_index: opts.injection_index,
    };
    Ok(PrequentialOutcome {
        report: ExperimentReport {
            summary,
            static_series,
            online_series,
            events,
            drift,
        },
        static_model,
        online_model,
    })
}

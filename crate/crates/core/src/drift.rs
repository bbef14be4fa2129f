// SPDX-License-Identifier: MIT OR Apache-2.0

//! Page-Hinkley change detection and per-class drift localisation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::{Label, TelemetryEvent, FEATURE_NAMES, N_FEATURES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("non-finite input to drift detector")]
    NonFiniteInput,
    #[error("correlation needs both labels present")]
    DegenerateLabels,
    #[error("invalid detector parameter: {0}")]
    InvalidParameter(String),
    #[error("feature index {0} out of range")]
    BadFeature(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Alarm on upward mean shifts.
    Increase,
    /// Alarm on downward mean shifts.
    Decrease,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageHinkleyParams {
    /// Magnitude of change that is ignored.
    pub delta: f64,
    /// Alarm threshold on the test statistic.
    pub lambda: f64,
    /// Samples required since the last reset before an alarm may fire.
    pub min_instances: u64,
    pub direction: Direction,
}

impl Default for PageHinkleyParams {
    fn default() -> Self {
        PageHinkleyParams {
            delta: 0.005,
            lambda: 50.0,
            min_instances: 30,
            direction: Direction::TwoSided,
        }
    }
}

impl PageHinkleyParams {
    pub fn check(&self) -> Result<(), DriftError> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(DriftError::InvalidParameter(format!("delta = {}", self.delta)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(DriftError::InvalidParameter(format!("lambda = {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhtStatus {
    InControl,
    Drift,
}

/// Page-Hinkley test over a univariate stream.
///
/// The running mean is shared by the upward statistic
/// `m_up − min(m_up)` with `m_up += x − x̄ − δ`, and the downward statistic
/// `max(m_down) − m_down` with `m_down += x − x̄ + δ`. Both are non-negative.
/// An alarm fully resets the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageHinkley {
    params: PageHinkleyParams,
    count: u64,
    mean: f64,
    sum_up: f64,
    min_up: f64,
    sum_down: f64,
    max_down: f64,
}

impl PageHinkley {
    pub fn new(params: PageHinkleyParams) -> Result<Self, DriftError> {
        params.check()?;
        Ok(PageHinkley {
            params,
            count: 0,
            mean: 0.0,
            sum_up: 0.0,
            min_up: 0.0,
            sum_down: 0.0,
            max_down: 0.0,
        })
    }

    pub fn params(&self) -> &PageHinkleyParams {
        &self.params
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        *self = PageHinkley {
            params: self.params,
            count: 0,
            mean: 0.0,
            sum_up: 0.0,
            min_up: 0.0,
            sum_down: 0.0,
            max_down: 0.0,
        };
    }

    pub fn increase_statistic(&self) -> f64 {
        self.sum_up - self.min_up
    }

    pub fn decrease_statistic(&self) -> f64 {
        self.max_down - self.sum_down
    }

    /// The statistic compared against λ for the configured direction.
    pub fn statistic(&self) -> f64 {
        match self.params.direction {
            Direction::Increase => self.increase_statistic(),
            Direction::Decrease => self.decrease_statistic(),
            Direction::TwoSided => self.increase_statistic().max(self.decrease_statistic()),
        }
    }

    pub fn update(&mut self, x: f64) -> Result<PhtStatus, DriftError> {
        if !x.is_finite() {
            return Err(DriftError::NonFiniteInput);
        }
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
        let dev = x - self.mean;
        self.sum_up += dev - self.params.delta;
        self.min_up = self.min_up.min(self.sum_up);
        self.sum_down += dev + self.params.delta;
        self.max_down = self.max_down.max(self.sum_down);

        if self.count >= self.params.min_instances && self.statistic() > self.params.lambda {
            self.reset();
            Ok(PhtStatus::Drift)
        } else {
            Ok(PhtStatus::InControl)
        }
    }
}

/// Runs a fresh detector over `values` and returns the alarm positions.
pub fn alarm_indices(values: &[f64], params: PageHinkleyParams) -> Result<Vec<usize>, DriftError> {
    let mut det = PageHinkley::new(params)?;
    let mut out = Vec::new();
    for (i, &x) in values.iter().enumerate() {
        if det.update(x)? == PhtStatus::Drift {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassContext {
    Normal,
    Failure,
    Unconditioned,
}

impl ClassContext {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassContext::Normal => "normal",
            ClassContext::Failure => "failure",
            ClassContext::Unconditioned => "unconditioned",
        }
    }
}

impl From<Label> for ClassContext {
    fn from(label: Label) -> Self {
        match label {
            Label::Normal => ClassContext::Normal,
            Label::Failure => ClassContext::Failure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftEvent {
    /// Position in the full stream.
    pub index: usize,
    pub class_context: ClassContext,
    pub feature: usize,
}

/// One detector per class, each fed only the samples of its class; indices
/// refer to positions in `events`. Output is in stream order.
pub fn detect_drifts_per_class(
    events: &[TelemetryEvent],
    feature_index: usize,
    params: PageHinkleyParams,
) -> Result<Vec<DriftEvent>, DriftError> {
    if feature_index >= N_FEATURES {
        return Err(DriftError::BadFeature(feature_index));
    }
    let mut detectors = [PageHinkley::new(params)?, PageHinkley::new(params)?];
    let mut out = Vec::new();
    for (index, ev) in events.iter().enumerate() {
        let x = ev.features().get(feature_index);
        if detectors[ev.label.index()].update(x)? == PhtStatus::Drift {
            out.push(DriftEvent {
                index,
                class_context: ev.label.into(),
                feature: feature_index,
            });
        }
    }
    Ok(out)
}

/// Pearson correlation of each feature against the 0/1 label, sorted by
/// absolute value (descending, ties by feature index). A constant feature
/// reports 0.
pub fn correlation_rank(events: &[TelemetryEvent]) -> Result<Vec<(usize, f64)>, DriftError> {
    let n = events.len() as f64;
    let failures = events.iter().filter(|e| e.label == Label::Failure).count();
    if failures == 0 || failures == events.len() {
        return Err(DriftError::DegenerateLabels);
    }
    let ys: Vec<f64> = events.iter().map(|e| e.label.as_f64()).collect();
    let my = ys.iter().sum::<f64>() / n;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();

    let mut out: Vec<(usize, f64)> = (0..N_FEATURES)
        .map(|j| {
            let xs: Vec<f64> = events.iter().map(|e| e.features().get(j)).collect();
            let mx = xs.iter().sum::<f64>() / n;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let r = if sxx > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
            (j, r.abs())
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

pub fn feature_name(index: usize) -> &'static str {
    FEATURE_NAMES.get(index).copied().unwrap_or("unknown")
}

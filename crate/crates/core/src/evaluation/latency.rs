// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-event latency of predict-only (static) and predict-then-learn
//! (online) processing.
//!
//! A trial is one pass over a fixed sample stream. Each trial yields the
//! median per-event time; the reported figure is the median of the trial
//! medians, rounded to four significant digits in milliseconds.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::prequential::Arm;
use super::EvalError;
use crate::learners::{Model, ModelKind, OnlineClassifier};
use crate::stats::median;
use crate::telemetry::TelemetryEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyOptions {
    pub trials: usize,
    pub events_per_trial: usize,
    /// Untimed passes run before the first trial.
    pub warmup_passes: usize,
}

impl Default for LatencyOptions {
    fn default() -> Self {
        LatencyOptions {
            trials: 100,
            events_per_trial: 1000,
            warmup_passes: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub model: ModelKind,
    pub static_ms: f64,
    pub online_ms: f64,
    /// `online_ms − static_ms`, exact in decimal.
    pub overhead_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSample {
    pub model: ModelKind,
    pub mode: Arm,
    pub trial: usize,
    pub event: usize,
    pub nanos: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub options: LatencyOptions,
    pub rows: Vec<LatencyRow>,
    pub raw: Vec<RawSample>,
}

/// A finite decimal `mantissa · 10^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Decimal {
    mantissa: i128,
    exponent: i32,
}

impl Decimal {
    /// Exact decimal reading of the shortest round-trip text of `x`.
    fn from_f64(x: f64) -> Decimal {
        let text = format!("{x:e}");
        let (m, e) = text.split_once('e').expect("exponent form");
        let exp: i32 = e.parse().expect("integer exponent");
        let (neg, m) = m.strip_prefix('-').map_or((false, m), |r| (true, r));
        let (int, frac) = m.split_once('.').unwrap_or((m, ""));
        let digits: i128 = format!("{int}{frac}").parse().expect("digits");
        Decimal {
            mantissa: if neg { -digits } else { digits },
            exponent: exp - frac.len() as i32,
        }
    }

    fn sub(self, other: Decimal) -> Decimal {
        let exponent = self.exponent.min(other.exponent);
        let scale = |d: Decimal| d.mantissa * 10i128.pow((d.exponent - exponent) as u32);
        Decimal {
            mantissa: scale(self) - scale(other),
            exponent,
        }
    }

    fn to_f64(self) -> f64 {
        format!("{}e{}", self.mantissa, self.exponent)
            .parse()
            .expect("decimal literal")
    }
}

/// `x` rounded to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("float literal")
}

/// `a − b` computed on the decimal values the two numbers print as.
pub fn decimal_difference(a: f64, b: f64) -> f64 {
    Decimal::from_f64(a).sub(Decimal::from_f64(b)).to_f64()
}

fn nanos_to_ms(ns: f64) -> f64 {
    round_significant(ns / 1e6, 4)
}

fn time_pass(model: &mut Model, sample: &[TelemetryEvent], learn: bool, out: &mut Vec<u64>) -> Result<(), EvalError> {
    out.clear();
    for (t, e) in sample.iter().enumerate() {
        let x = e.features();
        let wrap = |source| EvalError::Model {
            arm: if learn { Arm::Online } else { Arm::Static },
            index: t,
            source,
        };
        let start = Instant::now();
        let score = model.score_one(&x).map_err(wrap)?;
        if learn {
            model.learn_one(&x, e.label).map_err(wrap)?;
        }
        let elapsed = start.elapsed();
        black_box(score);
        out.push(elapsed.as_nanos() as u64);
    }
    Ok(())
}

/// Benchmarks each pretrained model on the first `events_per_trial` events
/// of `stream`. Online trials start from a fresh copy of the pretrained
/// model; copying happens outside the timed region.
pub fn latency_benchmark(
    models: &[Model],
    stream: &[TelemetryEvent],
    opts: LatencyOptions,
) -> Result<LatencyReport, EvalError> {
    if stream.is_empty() || opts.events_per_trial == 0 {
        return Err(EvalError::EmptyStream);
    }
    if opts.trials == 0 {
        return Err(EvalError::InvalidConfig("trials must be positive".into()));
    }
    let sample = &stream[..opts.events_per_trial.min(stream.len())];
    let mut rows = Vec::with_capacity(models.len());
    let mut raw = Vec::with_capacity(models.len() * 2 * opts.trials * sample.len());
    let mut buf = Vec::with_capacity(sample.len());

    for model in models {
        let kind = model.kind();
        for _ in 0..opts.warmup_passes {
            time_pass(&mut model.clone(), sample, false, &mut buf)?;
            time_pass(&mut model.clone(), sample, true, &mut buf)?;
        }
        let mut medians = [Vec::with_capacity(opts.trials), Vec::with_capacity(opts.trials)];
        for (slot, mode) in [Arm::Static, Arm::Online].into_iter().enumerate() {
            for trial in 0..opts.trials {
                let mut m = model.clone();
                time_pass(&mut m, sample, mode == Arm::Online, &mut buf)?;
                let as_f64: Vec<f64> = buf.iter().map(|&n| n as f64).collect();
                medians[slot].push(median(&as_f64).expect("non-empty trial"));
                raw.extend(buf.iter().enumerate().map(|(event, &nanos)| RawSample {
                    model: kind,
                    mode,
                    trial,
                    event,
                    nanos,
                }));
            }
        }
        let static_ms = nanos_to_ms(median(&medians[0]).expect("trials > 0"));
        let online_ms = nanos_to_ms(median(&medians[1]).expect("trials > 0"));
        rows.push(LatencyRow {
            model: kind,
            static_ms,
            online_ms,
            overhead_ms: decimal_difference(online_ms, static_ms),
        });
    }
    Ok(LatencyReport {
        options: opts,
        rows,
        raw,
    })
}

/// Recomputes a row's medians from the raw dump; used to audit reports.
pub fn medians_from_raw(raw: &[RawSample], model: ModelKind, mode: Arm) -> Option<f64> {
    let mut per_trial: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for s in raw.iter().filter(|s| s.model == model && s.mode == mode) {
        per_trial.entry(s.trial).or_default().push(s.nanos as f64);
    }
    let medians: Vec<f64> = per_trial.values().filter_map(|v| median(v)).collect();
    median(&medians).map(nanos_to_ms)
}

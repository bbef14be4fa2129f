// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::telemetry::Label;

/// Scores at or above this are read as a failure prediction.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub label: Label,
    pub score: f64,
}

impl Scored {
    pub fn new(label: Label, score: f64) -> Self {
        Scored { label, score }
    }

    pub fn predicted(&self) -> Label {
        if self.score >= DECISION_THRESHOLD {
            Label::Failure
        } else {
            Label::Normal
        }
    }

    pub fn correct(&self) -> bool {
        self.predicted() == self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auc {
    pub value: f64,
    /// The window held a single class; `value` is then 0.5.
    pub degenerate: bool,
}

pub fn rolling_accuracy(window: &[Scored]) -> Result<f64, EvalError> {
    if window.is_empty() {
        return Err(EvalError::EmptyWindow);
    }
    let hits = window.iter().filter(|s| s.correct()).count();
    Ok(hits as f64 / window.len() as f64)
}

/// Mann-Whitney AUC with midranks for ties.
///
/// Works on doubled ranks so the numerator `2R⁺ − n⁺(n⁺+1)` is an integer,
/// which makes the result identical to counting `wins + ties/2` over all
/// positive/negative pairs.
pub fn rolling_auc(window: &[Scored]) -> Auc {
    let n_pos = window.iter().filter(|s| s.label == Label::Failure).count() as u64;
    let n_neg = window.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Auc {
            value: 0.5,
            degenerate: true,
        };
    }
    let mut sorted: Vec<&Scored> = window.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    let mut doubled_rank_sum = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        // Positions i+1..=j share the midrank (i+1+j)/2.
        let doubled = (i + 1 + j) as u64;
        let pos_in_group = sorted[i..j].iter().filter(|s| s.label == Label::Failure).count() as u64;
        doubled_rank_sum += doubled * pos_in_group;
        i = j;
    }
    let numerator = doubled_rank_sum - n_pos * (n_pos + 1);
    Auc {
        value: numerator as f64 / (2 * n_pos * n_neg) as f64,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// One point per event over the most recent `W` events.
    #[default]
    Sliding,
    /// One point per completed block of `W` events; the last partial block
    /// is emitted too.
    Blocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub event_index: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub auc_degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct RollingWindow {
    capacity: usize,
    buf: VecDeque<Scored>,
}

impl RollingWindow {
    pub fn new(capacity: usize) -> Result<Self, EvalError> {
        if capacity == 0 {
            return Err(EvalError::InvalidConfig("window must be positive".into()));
        }
        Ok(RollingWindow {
            capacity,
            buf: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn push(&mut self, s: Scored) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(s);
    }

    pub fn contents(&self) -> Vec<Scored> {
        self.buf.iter().copied().collect()
    }

    pub fn point(&self, event_index: usize) -> Result<MetricPoint, EvalError> {
        let w = self.contents();
        let auc = rolling_auc(&w);
        Ok(MetricPoint {
            event_index,
            accuracy: rolling_accuracy(&w)?,
            auc: auc.value,
            auc_degenerate: auc.degenerate,
        })
    }
}

/// Metric series for a whole scored sequence.
pub fn metric_series(scored: &[Scored], window: usize, mode: WindowMode) -> Result<Vec<MetricPoint>, EvalError> {
    let mut w = RollingWindow::new(window)?;
    let mut out = Vec::new();
    for (t, s) in scored.iter().enumerate() {
        w.push(*s);
        match mode {
            WindowMode::Sliding => out.push(w.point(t)?),
            WindowMode::Blocks => {
                if w.len() == window || t + 1 == scored.len() {
                    out.push(w.point(t)?);
                    w.clear();
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn s(y: u8, score: f64) -> Scored {
        Scored::new(Label::from_bit(y).unwrap(), score)
    }

    fn brute_auc(w: &[Scored]) -> f64 {
        let mut num = 0u64;
        let mut pairs = 0u64;
        for p in w.iter().filter(|x| x.label == Label::Failure) {
            for n in w.iter().filter(|x| x.label == Label::Normal) {
                pairs += 1;
                num += if p.score > n.score {
                    2
                } else if p.score == n.score {
                    1
                } else {
                    0
                };
            }
        }
        num as f64 / (2 * pairs) as f64
    }

    #[test]
    fn accuracy_examples() {
        let w = [s(1, 0.9), s(1, 0.1), s(0, 0.2), s(0, 0.7)];
        assert_eq!(rolling_accuracy(&w).unwrap(), 0.5);
        assert_eq!(rolling_accuracy(&vec![s(0, 0.0); 500]).unwrap(), 1.0);
        assert_eq!(rolling_accuracy(&[]), Err(EvalError::EmptyWindow));
        // The threshold itself counts as a failure prediction.
        assert!(s(1, 0.5).correct());
    }

    #[test]
    fn auc_examples() {
        let w = [s(1, 0.9), s(0, 0.8), s(1, 0.4), s(0, 0.3)];
        assert_eq!(rolling_auc(&w).value, 0.75);
        let perfect = [s(0, 0.1), s(0, 0.2), s(1, 0.3), s(1, 0.9)];
        assert_eq!(rolling_auc(&perfect).value, 1.0);
        let ties = [s(0, 0.4), s(1, 0.4), s(0, 0.4), s(1, 0.4)];
        assert_eq!(
            rolling_auc(&ties),
            Auc {
                value: 0.5,
                degenerate: false
            }
        );
        let one_class = [s(1, 0.9), s(1, 0.1)];
        assert_eq!(
            rolling_auc(&one_class),
            Auc {
                value: 0.5,
                degenerate: true
            }
        );
    }

    #[test]
    fn accuracy_matches_recount_on_random_windows() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let w: Vec<Scored> = (0..500).map(|_| s(rng.random_range(0..2), rng.random())).collect();
            let mut hits = 0;
            for x in &w {
                let pred = u8::from(x.score >= 0.5);
                if pred == x.label.as_bit() {
                    hits += 1;
                }
            }
            assert_eq!(rolling_accuracy(&w).unwrap(), hits as f64 / 500.0);
        }
    }

    #[test]
    fn sliding_window_drops_oldest() {
        let scored = [s(1, 0.9), s(1, 0.1), s(0, 0.1), s(0, 0.1)];
        let series = metric_series(&scored, 2, WindowMode::Sliding).unwrap();
        let acc: Vec<f64> = series.iter().map(|p| p.accuracy).collect();
        assert_eq!(acc, vec![1.0, 0.5, 0.5, 1.0]);
        assert!(series[0].auc_degenerate && !series[2].auc_degenerate);
    }

    #[test]
    fn block_mode_emits_per_block() {
        let scored: Vec<Scored> = (0..7).map(|i| s(i % 2, 0.9)).collect();
        let series = metric_series(&scored, 3, WindowMode::Blocks).unwrap();
        let idx: Vec<usize> = series.iter().map(|p| p.event_index).collect();
        assert_eq!(idx, vec![2, 5, 6]);
    }

    proptest! {
        #[test]
        fn auc_equals_pair_count(
            w in proptest::collection::vec((0u8..2, 0u8..20), 1..120)
        ) {
            let w: Vec<Scored> = w.into_iter().map(|(y, q)| s(y, f64::from(q) / 20.0)).collect();
            let a = rolling_auc(&w);
            if a.degenerate {
                prop_assert_eq!(a.value, 0.5);
            } else {
                prop_assert_eq!(a.value, brute_auc(&w));
                prop_assert!((0.0..=1.0).contains(&a.value));
            }
        }

        #[test]
        fn metrics_depend_only_on_window_contents(
            prefix in proptest::collection::vec((0u8..2, 0.0f64..1.0), 0..40),
            tail in proptest::collection::vec((0u8..2, 0.0f64..1.0), 10),
        ) {
            let tail: Vec<Scored> = tail.into_iter().map(|(y, v)| s(y, v)).collect();
            let mut prefix: Vec<Scored> = prefix.into_iter().map(|(y, v)| s(y, v)).collect();
            let run = |pre: &[Scored]| {
                let mut all = pre.to_vec();
                all.extend_from_slice(&tail);
                *metric_series(&all, 10, WindowMode::Sliding).unwrap().last().unwrap()
            };
            let a = run(&prefix);
            prefix.reverse();
            let b = run(&prefix);
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert_eq!(a.auc, b.auc);
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Online logistic regression trained by plain SGD on binary log loss over
//! running-standardised features.

use serde::{Deserialize, Serialize};

use super::{check_finite, ModelError, OnlineClassifier};
use crate::stats::RunningMoments;
use crate::telemetry::{FeatureVector, Label, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub learning_rate: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { learning_rate: 0.01 }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot(w: &[f64; N_FEATURES], x: &[f64; N_FEATURES]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Binary log loss of one standardised sample, computed via softplus.
pub fn log_loss(weights: &[f64; N_FEATURES], bias: f64, x: &[f64; N_FEATURES], y: f64) -> f64 {
    let z = dot(weights, x) + bias;
    // softplus(z) − y·z, arranged so the linear terms cancel symbolically:
    // for y ∈ {0, 1} nothing is subtracted from a nearly equal quantity.
    if z > 0.0 {
        (1.0 - y) * z + (-z).exp().ln_1p()
    } else {
        -y * z + z.exp().ln_1p()
    }
}

/// Analytic gradient of [`log_loss`] with respect to (weights, bias).
pub fn log_loss_gradient(
    weights: &[f64; N_FEATURES],
    bias: f64,
    x: &[f64; N_FEATURES],
    y: f64,
) -> ([f64; N_FEATURES], f64) {
    let r = sigmoid(dot(weights, x) + bias) - y;
    (x.map(|xj| r * xj), r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    config: LogisticConfig,
    weights: [f64; N_FEATURES],
    bias: f64,
    scaler: [RunningMoments; N_FEATURES],
}

impl Default for LogisticRegression {
    fn default() -> Self {
        Self::new(LogisticConfig::default())
    }
}

impl LogisticRegression {
    pub fn new(config: LogisticConfig) -> Self {
        LogisticRegression {
            config,
            weights: [0.0; N_FEATURES],
            bias: 0.0,
            scaler: [RunningMoments::new(); N_FEATURES],
        }
    }

    pub fn with_parameters(config: LogisticConfig, weights: [f64; N_FEATURES], bias: f64) -> Self {
        LogisticRegression {
            weights,
            bias,
            ..Self::new(config)
        }
    }

    pub fn weights(&self) -> &[f64; N_FEATURES] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `(x − μ) / σ` under the running statistics; 0 for features with no spread yet.
    pub fn standardize(&self, x: &FeatureVector) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for (j, m) in self.scaler.iter().enumerate() {
            let sd = m.std_dev();
            out[j] = if sd > 0.0 { (x.get(j) - m.mean()) / sd } else { 0.0 };
        }
        out
    }

    pub fn score_standardized(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }

    /// One SGD step on an already standardised sample.
    pub fn sgd_step(&mut self, x: &[f64; N_FEATURES], y: f64) {
        let (gw, gb) = log_loss_gradient(&self.weights, self.bias, x, y);
        let eta = self.config.learning_rate;
        for (w, g) in self.weights.iter_mut().zip(gw) {
            *w -= eta * g;
        }
        self.bias -= eta * gb;
    }
}

impl OnlineClassifier for LogisticRegression {
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        check_finite(x)?;
        Ok(self.score_standardized(&self.standardize(x)))
    }

    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        check_finite(x)?;
        for (m, &v) in self.scaler.iter_mut().zip(x.values()) {
            m.push(v);
        }
        let xs = self.standardize(x);
        self.sgd_step(&xs, y.as_f64());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_model_scores_half() {
        let m = LogisticRegression::default();
        assert_eq!(m.score_one(&FeatureVector([1e-3, 30.0, 0.2, 18.0])).unwrap(), 0.5);
        assert_eq!(m.score_standardized(&[5.0, -3.0, 1.0, 0.0]), 0.5);
    }

    #[test]
    fn sigmoid_limits_and_closed_form() {
        assert_eq!(sigmoid(1e3), 1.0);
        assert_eq!(sigmoid(-1e3), 0.0);
        let m = LogisticRegression::with_parameters(LogisticConfig::default(), [1.0, 0.0, 0.0, 0.0], 0.0);
        let s = m.score_standardized(&[2.0, 9.0, -4.0, 0.5]);
        assert!((s - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert!((s - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn hand_computed_sgd_step() {
        let mut m = LogisticRegression::default();
        m.sgd_step(&[1.0, 0.0, 0.0, 0.0], 1.0);
        // (0.5 − 1) · (−0.01) = 0.005
        assert!((m.weights()[0] - 0.005).abs() < 1e-15);
        assert_eq!(&m.weights()[1..], &[0.0, 0.0, 0.0]);
        assert!((m.bias() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn exact_prediction_gives_zero_step() {
        // y equal to the current score: residual is exactly zero.
        let mut m = LogisticRegression::default();
        m.sgd_step(&[1.0, 2.0, 3.0, 4.0], 0.5);
        assert_eq!(m.weights(), &[0.0; 4]);
        assert_eq!(m.bias(), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let b = rng.random_range(-2.0..2.0);
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let y = f64::from(rng.random_range(0..2u8));
            let (gw, gb) = log_loss_gradient(&w, b, &x, y);
            let h = 1e-5;
            for j in 0..4 {
                let (mut wp, mut wm) = (w, w);
                wp[j] += h;
                wm[j] -= h;
                let fd = (log_loss(&wp, b, &x, y) - log_loss(&wm, b, &x, y)) / (2.0 * h);
                assert!((fd - gw[j]).abs() <= 1e-6 * gw[j].abs().max(1e-3), "{fd} vs {}", gw[j]);
            }
            let fd = (log_loss(&w, b + h, &x, y) - log_loss(&w, b - h, &x, y)) / (2.0 * h);
            assert!((fd - gb).abs() <= 1e-6 * gb.abs().max(1e-3));
        }
    }

    #[test]
    fn confident_loss_keeps_precision() {
        // σ(40) ≈ 1 − 4.25e-18; the loss is that residual, not a rounding error.
        let l = log_loss(&[0.0; 4], 40.0, &[0.0; 4], 1.0);
        assert!((l / (-40.0f64).exp() - 1.0).abs() < 1e-12, "{l}");
        assert!((log_loss(&[0.0; 4], 0.0, &[0.0; 4], 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn learns_a_separable_rule() {
        let mut m = LogisticRegression::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
            let osnr: f64 = rng.random_range(10.0..30.0);
            let label = if osnr < 20.0 { Label::Failure } else { Label::Normal };
            (FeatureVector([0.0, 35.0, 0.0, osnr]), label)
        };
        for _ in 0..5000 {
            let (x, y) = sample(&mut rng);
            m.learn_one(&x, y).unwrap();
        }
        let correct = (0..1000)
            .filter(|_| {
                let (x, y) = sample(&mut rng);
                (m.score_one(&x).unwrap() >= 0.5) == (y == Label::Failure)
            })
            .count();
        assert!(correct > 900, "{correct}");
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = LogisticRegression::default();
        let bad = FeatureVector([0.0, f64::NAN, 0.0, 1.0]);
        assert_eq!(m.score_one(&bad), Err(ModelError::NonFiniteInput));
        assert_eq!(m.learn_one(&bad, Label::Normal), Err(ModelError::NonFiniteInput));
    }

    proptest! {
        #[test]
        fn weights_stay_finite(xs in proptest::collection::vec((prop::array::uniform4(-1e6f64..1e6), any::<bool>()), 1..200)) {
            let mut m = LogisticRegression::default();
            for (x, y) in xs {
                let fv = FeatureVector(x);
                m.learn_one(&fv, if y { Label::Failure } else { Label::Normal }).unwrap();
                let s = m.score_one(&fv).unwrap();
                prop_assert!((0.0..=1.0).contains(&s));
            }
            prop_assert!(m.weights().iter().all(|w| w.is_finite()) && m.bias().is_finite());
        }
    }
}

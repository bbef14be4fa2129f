// SPDX-License-Identifier: MIT OR Apache-2.0

//! Incremental Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::{check_finite, ModelError, OnlineClassifier};
use crate::stats::RunningMoments;
use crate::telemetry::{FeatureVector, Label, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesConfig {
    /// Floor applied to every class variance when evaluating a likelihood.
    pub min_variance: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig { min_variance: 1e-10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ClassStats {
    count: u64,
    moments: [RunningMoments; N_FEATURES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    config: NaiveBayesConfig,
    classes: [ClassStats; 2],
}

impl Default for GaussianNb {
    fn default() -> Self {
        Self::new(NaiveBayesConfig::default())
    }
}

fn log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

impl GaussianNb {
    pub fn new(config: NaiveBayesConfig) -> Self {
        GaussianNb {
            config,
            classes: Default::default(),
        }
    }

    pub fn class_count(&self, label: Label) -> u64 {
        self.classes[label.index()].count
    }

    pub fn mean(&self, label: Label, feature: usize) -> f64 {
        self.classes[label.index()].moments[feature].mean()
    }

    /// Stored (unfloored) population variance.
    pub fn variance(&self, label: Label, feature: usize) -> f64 {
        self.classes[label.index()].moments[feature].variance()
    }

    /// Class prior `n_c / Σ n`; `None` before any sample.
    pub fn prior(&self, label: Label) -> Option<f64> {
        let total = self.classes[0].count + self.classes[1].count;
        (total > 0).then(|| self.classes[label.index()].count as f64 / total as f64)
    }

    /// `ln P(c) + Σ_j ln N(x_j; μ, max(σ², v_min))`, or −∞ for an unseen class.
    pub fn joint_log_likelihood(&self, x: &FeatureVector, label: Label) -> f64 {
        let stats = &self.classes[label.index()];
        let Some(prior) = self.prior(label).filter(|p| *p > 0.0) else {
            return f64::NEG_INFINITY;
        };
        let floor = self.config.min_variance;
        prior.ln()
            + stats
                .moments
                .iter()
                .enumerate()
                .map(|(j, m)| log_density(x.get(j), m.mean(), m.variance().max(floor)))
                .sum::<f64>()
    }
}

impl OnlineClassifier for GaussianNb {
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        check_finite(x)?;
        if self.prior(Label::Normal).is_none() {
            return Ok(0.5);
        }
        let l0 = self.joint_log_likelihood(x, Label::Normal);
        let l1 = self.joint_log_likelihood(x, Label::Failure);
        Ok(match (l0.is_finite(), l1.is_finite()) {
            (true, true) => 1.0 / (1.0 + (l0 - l1).exp()),
            (false, true) => 1.0,
            (true, false) => 0.0,
            (false, false) => 0.5,
        })
    }

    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        check_finite(x)?;
        let stats = &mut self.classes[y.index()];
        stats.count += 1;
        for (m, &v) in stats.moments.iter_mut().zip(x.values()) {
            m.push(v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(a: f64) -> FeatureVector {
        FeatureVector([a, a, a, a])
    }

    #[test]
    fn unfitted_scores_half() {
        assert_eq!(GaussianNb::default().score_one(&fv(3.0)).unwrap(), 0.5);
    }

    #[test]
    fn first_sample_has_zero_variance() {
        let mut m = GaussianNb::default();
        m.learn_one(&FeatureVector([1.0, 2.0, 3.0, 4.0]), Label::Failure)
            .unwrap();
        assert_eq!(m.mean(Label::Failure, 2), 3.0);
        assert_eq!(m.variance(Label::Failure, 2), 0.0);
        // Only failures seen: posterior is certain rather than NaN.
        assert_eq!(m.score_one(&fv(100.0)).unwrap(), 1.0);
    }

    #[test]
    fn batch_statistics_of_one_to_four() {
        let mut m = GaussianNb::default();
        for v in [1.0, 2.0, 3.0, 4.0] {
            m.learn_one(&fv(v), Label::Normal).unwrap();
        }
        assert!((m.mean(Label::Normal, 0) - 2.5).abs() < 1e-12);
        assert!((m.variance(Label::Normal, 0) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn symmetric_classes_give_half() {
        let mut m = GaussianNb::default();
        for v in [1.0, 2.0, 3.0] {
            m.learn_one(&fv(v), Label::Normal).unwrap();
            m.learn_one(&fv(v), Label::Failure).unwrap();
        }
        for x in [-5.0, 0.0, 2.0, 40.0] {
            assert!((m.score_one(&fv(x)).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_likelihoods_return_prior() {
        let mut m = GaussianNb::default();
        for v in [1.0, 3.0] {
            for _ in 0..3 {
                m.learn_one(&fv(v), Label::Normal).unwrap();
            }
            m.learn_one(&fv(v), Label::Failure).unwrap();
        }
        assert!((m.prior(Label::Normal).unwrap() + m.prior(Label::Failure).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.score_one(&fv(1.7)).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn variance_floor_keeps_scores_finite() {
        let mut m = GaussianNb::default();
        for _ in 0..5 {
            m.learn_one(&fv(1.0), Label::Normal).unwrap();
            m.learn_one(&fv(2.0), Label::Failure).unwrap();
        }
        let s = m.score_one(&fv(1.5 + 1e-6)).unwrap();
        assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        assert_eq!(m.score_one(&fv(1.0)).unwrap(), 0.0);
    }
}

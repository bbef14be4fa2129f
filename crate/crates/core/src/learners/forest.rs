// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adaptive random forest: Hoeffding trees with online (Poisson) bagging,
//! random per-leaf feature subsets, and drift-triggered tree replacement.
//!
//! Each member watches its own 0/1 prequential error stream with two
//! upward Page-Hinkley detectors. The warning detector starts a background
//! tree; the drift detector swaps the background tree in (or a fresh tree if
//! no warning preceded it).

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::hoeffding::{HoeffdingConfig, HoeffdingTree};
use super::{check_finite, ModelError, OnlineClassifier};
use crate::drift::{Direction, PageHinkley, PageHinkleyParams, PhtStatus};
use crate::seed;
use crate::telemetry::{FeatureVector, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bagging {
    /// Weight each sample per tree by a Poisson(λ) draw.
    Poisson(f64),
    /// Every tree sees every sample once.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: usize,
    pub bagging: Bagging,
    pub grace_period: f64,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub n_split_points: usize,
    /// `None` disables background trees.
    pub warning: Option<PageHinkleyParams>,
    /// `None` disables tree replacement.
    pub drift: Option<PageHinkleyParams>,
    /// Root of the forest's own RNG. [`super::Model::build`] replaces it
    /// with the seed it is given.
    pub seed: u64,
}

fn error_detector(lambda: f64) -> PageHinkleyParams {
    PageHinkleyParams {
        delta: 0.005,
        lambda,
        min_instances: 30,
        direction: Direction::Increase,
    }
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 10,
            max_features: 2,
            bagging: Bagging::Poisson(6.0),
            grace_period: 50.0,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            n_split_points: 10,
            warning: Some(error_detector(25.0)),
            drift: Some(error_detector(50.0)),
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn tree_config(&self) -> HoeffdingConfig {
        HoeffdingConfig {
            grace_period: self.grace_period,
            split_confidence: self.split_confidence,
            tie_threshold: self.tie_threshold,
            n_split_points: self.n_split_points,
            max_features: Some(self.max_features),
        }
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParameter(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_features == 0 {
            return bad("max_features must be positive");
        }
        if let Bagging::Poisson(l) = self.bagging {
            if !(l.is_finite() && l > 0.0) {
                return bad("bagging rate must be positive");
            }
        }
        if let (Some(w), Some(d)) = (self.warning, self.drift) {
            if w.lambda >= d.lambda {
                return bad("warning lambda must be below drift lambda");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Option<PageHinkley>,
    drift: Option<PageHinkley>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRandomForest {
    config: ForestConfig,
    members: Vec<Member>,
    rng: ChaCha8Rng,
    warnings: u64,
    replacements: u64,
}

impl Default for AdaptiveRandomForest {
    fn default() -> Self {
        Self::new(ForestConfig::default()).expect("default forest config is valid")
    }
}

/// Mean of member probabilities; 0.5 for an empty ensemble.
pub fn mean_probability(probs: &[f64]) -> f64 {
    if probs.is_empty() {
        0.5
    } else {
        probs.iter().sum::<f64>() / probs.len() as f64
    }
}

impl AdaptiveRandomForest {
    pub fn new(config: ForestConfig) -> Result<Self, ModelError> {
        config.check()?;
        let mut rng = seed::rng(config.seed);
        let detector = |p: Option<PageHinkleyParams>| {
            p.map(PageHinkley::new)
                .transpose()
                .map_err(|e| ModelError::InvalidParameter(e.to_string()))
        };
        let mut members = Vec::with_capacity(config.n_trees);
        for _ in 0..config.n_trees {
            let tree = HoeffdingTree::new(config.tree_config(), HoeffdingTree::next_seed(&mut rng));
            members.push(Member {
                tree,
                background: None,
                warning: detector(config.warning)?,
                drift: detector(config.drift)?,
            });
        }
        Ok(AdaptiveRandomForest {
            config,
            members,
            rng,
            warnings: 0,
            replacements: 0,
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn n_trees(&self) -> usize {
        self.members.len()
    }

    /// Background trees started so far.
    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    /// Trees swapped out after a drift alarm.
    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    pub fn tree_probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        self.members.iter().map(|m| m.tree.predict_proba(x)).collect()
    }

    fn fresh_tree(&mut self) -> HoeffdingTree {
        HoeffdingTree::new(self.config.tree_config(), HoeffdingTree::next_seed(&mut self.rng))
    }

    fn draw_weight(&mut self) -> u32 {
        match self.config.bagging {
            Bagging::Unit => 1,
            Bagging::Poisson(lambda) => {
                let dist = Poisson::new(lambda).expect("rate checked at construction");
                let k: f64 = dist.sample(&mut self.rng);
                k as u32
            }
        }
    }
}

impl OnlineClassifier for AdaptiveRandomForest {
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        check_finite(x)?;
        Ok(mean_probability(&self.tree_probabilities(x)))
    }

    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        check_finite(x)?;
        for i in 0..self.members.len() {
            let k = self.draw_weight();
            let member = &mut self.members[i];
            let wrong = (member.tree.predict_proba(x) >= 0.5) != (y == Label::Failure);
            if k > 0 {
                member.tree.learn_weighted(x, y, k)?;
                if let Some(bg) = member.background.as_mut() {
                    bg.learn_weighted(x, y, k)?;
                }
            }
            let err = if wrong { 1.0 } else { 0.0 };

            let warned = match member.warning.as_mut() {
                Some(det) => det.update(err).map_err(|_| ModelError::NonFiniteInput)? == PhtStatus::Drift,
                None => false,
            };
            let drifted = match member.drift.as_mut() {
                Some(det) => det.update(err).map_err(|_| ModelError::NonFiniteInput)? == PhtStatus::Drift,
                None => false,
            };
            if warned && self.members[i].background.is_none() {
                let bg = self.fresh_tree();
                self.members[i].background = Some(bg);
                self.warnings += 1;
            }
            if drifted {
                let replacement = match self.members[i].background.take() {
                    Some(bg) => bg,
                    None => self.fresh_tree(),
                };
                let member = &mut self.members[i];
                member.tree = replacement;
                if let Some(w) = member.warning.as_mut() {
                    w.reset();
                }
                self.replacements += 1;
            }
        }
        Ok(())
    }
}

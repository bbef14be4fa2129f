// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hoeffding tree for numeric features and binary labels.
//!
//! Leaves keep per-class Gaussian estimates of every feature. Every
//! `grace_period` units of weight a leaf evaluates `n_split_points` evenly
//! spaced thresholds per candidate feature by information gain, and splits
//! once the best candidate beats the runner-up (or the null split) by more
//! than the Hoeffding bound `ε = √(R² ln(1/δ) / 2n)`, or `ε < τ`.

use rand::seq::index::sample;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::{check_finite, ModelError, OnlineClassifier};
use crate::seed;
use crate::stats::RunningMoments;
use crate::telemetry::{FeatureVector, Label, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoeffdingConfig {
    /// Weight a leaf accumulates between split attempts.
    pub grace_period: f64,
    /// δ in the Hoeffding bound.
    pub split_confidence: f64,
    /// τ: split anyway once the bound falls below this.
    pub tie_threshold: f64,
    pub n_split_points: usize,
    /// Features considered at each leaf; `None` or ≥ 4 means all of them.
    pub max_features: Option<usize>,
}

impl Default for HoeffdingConfig {
    fn default() -> Self {
        HoeffdingConfig {
            grace_period: 50.0,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            n_split_points: 10,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Leaf {
    /// Weight routed to this leaf since it was created.
    class_weight: [f64; 2],
    /// Class distribution estimated for this side of the parent's split.
    inherited: [f64; 2],
    observers: [[RunningMoments; 2]; N_FEATURES],
    /// Observed min and max per feature; `None` before the first sample.
    ranges: [Option<(f64, f64)>; N_FEATURES],
    weight_at_last_attempt: f64,
    features: Vec<usize>,
}

impl Leaf {
    fn new(features: Vec<usize>, inherited: [f64; 2]) -> Self {
        Leaf {
            class_weight: [0.0; 2],
            inherited,
            observers: [[RunningMoments::new(); 2]; N_FEATURES],
            ranges: [None; N_FEATURES],
            weight_at_last_attempt: 0.0,
            features,
        }
    }

    fn total(&self) -> f64 {
        self.class_weight[0] + self.class_weight[1]
    }

    fn update(&mut self, x: &FeatureVector, y: Label, w: f64) {
        self.class_weight[y.index()] += w;
        for j in 0..N_FEATURES {
            let v = x.get(j);
            self.observers[j][y.index()].push_weighted(v, w);
            let r = self.ranges[j].get_or_insert((v, v));
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }

    fn failure_probability(&self) -> f64 {
        let n1 = self.class_weight[1] + self.inherited[1];
        let n = self.total() + self.inherited[0] + self.inherited[1];
        (n1 + 1.0) / (n + 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Box<Leaf>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A scored split candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    feature: usize,
    threshold: f64,
    merit: f64,
    left: [f64; 2],
    right: [f64; 2],
}

fn entropy(dist: [f64; 2]) -> f64 {
    let total = dist[0] + dist[1];
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Share of a class's mass at or below `t` under its Gaussian estimate.
fn mass_below(m: &RunningMoments, t: f64) -> f64 {
    let sd = m.std_dev();
    if sd > 0.0 {
        0.5 * (1.0 + erf((t - m.mean()) / (sd * std::f64::consts::SQRT_2)))
    } else if t >= m.mean() {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    config: HoeffdingConfig,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    split_attempts: u64,
}

impl Default for HoeffdingTree {
    fn default() -> Self {
        Self::new(HoeffdingConfig::default(), 0)
    }
}

impl HoeffdingTree {
    /// `seed` drives only the per-leaf feature subsets; it is unused when
    /// every feature is considered.
    pub fn new(config: HoeffdingConfig, seed: u64) -> Self {
        let mut tree = HoeffdingTree {
            config,
            nodes: Vec::new(),
            rng: seed::rng(seed),
            split_attempts: 0,
        };
        let features = tree.draw_features();
        tree.nodes.push(Node::Leaf(Box::new(Leaf::new(features, [0.0; 2]))));
        tree
    }

    pub fn config(&self) -> &HoeffdingConfig {
        &self.config
    }

    fn draw_features(&mut self) -> Vec<usize> {
        match self.config.max_features {
            Some(k) if k < N_FEATURES => {
                let mut f = sample(&mut self.rng, N_FEATURES, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..N_FEATURES).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn split_attempts(&self) -> u64 {
        self.split_attempts
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Total weight currently held in leaves (samples since each leaf's creation).
    pub fn leaf_weight(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l.total()),
                _ => None,
            })
            .sum()
    }

    fn route(&self, x: &FeatureVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Laplace-smoothed failure probability at the leaf `x` reaches.
    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        match &self.nodes[self.route(x)] {
            Node::Leaf(leaf) => leaf.failure_probability(),
            Node::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }

    /// Adds `x` with multiplicity `weight` (≥ 1).
    pub fn learn_weighted(&mut self, x: &FeatureVector, y: Label, weight: u32) -> Result<(), ModelError> {
        check_finite(x)?;
        if weight == 0 {
            return Err(ModelError::InvalidParameter("tree sample weight must be ≥ 1".into()));
        }
        let idx = self.route(x);
        let grace = self.config.grace_period;
        let ready = match &mut self.nodes[idx] {
            Node::Leaf(leaf) => {
                leaf.update(x, y, f64::from(weight));
                leaf.total() - leaf.weight_at_last_attempt >= grace
            }
            Node::Split { .. } => unreachable!(),
        };
        if ready {
            self.attempt_split(idx);
        }
        Ok(())
    }

    fn best_for_feature(&self, leaf: &Leaf, feature: usize, parent_entropy: f64) -> Option<Candidate> {
        let (lo, hi) = leaf.ranges[feature]?;
        if hi <= lo {
            return None;
        }
        let total = leaf.total();
        let k = self.config.n_split_points;
        let mut best: Option<Candidate> = None;
        for i in 1..=k {
            let t = lo + (hi - lo) * i as f64 / (k + 1) as f64;
            let mut left = [0.0; 2];
            let mut right = [0.0; 2];
            for c in 0..2 {
                let w = leaf.class_weight[c];
                let below = w * mass_below(&leaf.observers[feature][c], t);
                left[c] = below;
                right[c] = w - below;
            }
            let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
            let merit = parent_entropy - (wl * entropy(left) + wr * entropy(right)) / total;
            if best.is_none_or(|b| merit > b.merit) {
                best = Some(Candidate {
                    feature,
                    threshold: t,
                    merit,
                    left,
                    right,
                });
            }
        }
        best
    }

    fn attempt_split(&mut self, idx: usize) {
        let Node::Leaf(leaf) = &self.nodes[idx] else {
            return;
        };
        let leaf_total = leaf.total();
        // Pure leaves have nothing to gain.
        if leaf.class_weight[0] <= 0.0 || leaf.class_weight[1] <= 0.0 {
            if let Node::Leaf(l) = &mut self.nodes[idx] {
                l.weight_at_last_attempt = leaf_total;
            }
            return;
        }
        self.split_attempts += 1;
        let parent_entropy = entropy(leaf.class_weight);
        let mut candidates: Vec<Candidate> = leaf
            .features
            .iter()
            .filter_map(|&f| self.best_for_feature(leaf, f, parent_entropy))
            .collect();
        // Highest merit first; lowest feature index wins ties.
        candidates.sort_by(|a, b| b.merit.total_cmp(&a.merit).then(a.feature.cmp(&b.feature)));

        let range = 1.0; // log2 of the class count
        let eps = (range * range * (1.0 / self.config.split_confidence).ln() / (2.0 * leaf_total)).sqrt();
        let chosen = candidates.first().copied().filter(|best| {
            let runner_up = candidates.get(1).map_or(0.0, |c| c.merit.max(0.0));
            best.merit > 0.0 && (best.merit - runner_up > eps || eps < self.config.tie_threshold)
        });

        match chosen {
            None => {
                if let Node::Leaf(l) = &mut self.nodes[idx] {
                    l.weight_at_last_attempt = leaf_total;
                }
            }
            Some(c) => {
                let left_features = self.draw_features();
                let right_features = self.draw_features();
                let left = self.nodes.len();
                self.nodes.push(Node::Leaf(Box::new(Leaf::new(left_features, c.left))));
                self.nodes
                    .push(Node::Leaf(Box::new(Leaf::new(right_features, c.right))));
                self.nodes[idx] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right: left + 1,
                };
            }
        }
    }

    /// Feature and threshold at the root, if it has split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf(_) => None,
        }
    }

    pub(crate) fn next_seed(rng: &mut ChaCha8Rng) -> u64 {
        rng.next_u64()
    }
}

impl OnlineClassifier for HoeffdingTree {
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        check_finite(x)?;
        Ok(self.predict_proba(x))
    }

    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        self.learn_weighted(x, y, 1)
    }
}

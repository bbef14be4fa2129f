// SPDX-License-Identifier: MIT OR Apache-2.0

//! Online binary classifiers sharing a predict-then-learn interface, plus
//! JSON snapshots of fitted models.

pub mod forest;
pub mod hoeffding;
pub mod logistic;
pub mod naive_bayes;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::{FeatureVector, Label};

pub use forest::{AdaptiveRandomForest, Bagging, ForestConfig};
pub use hoeffding::{HoeffdingConfig, HoeffdingTree};
pub use logistic::{LogisticConfig, LogisticRegression};
pub use naive_bayes::{GaussianNb, NaiveBayesConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("feature vector contains a non-finite value")]
    NonFiniteInput,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

pub(crate) fn check_finite(x: &FeatureVector) -> Result<(), ModelError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFiniteInput)
    }
}

pub trait OnlineClassifier {
    /// Failure probability in [0, 1]. Never mutates the model.
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError>;
    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError>;

    fn predict_one(&self, x: &FeatureVector) -> Result<Label, ModelError> {
        Ok(if self.score_one(x)? >= 0.5 {
            Label::Failure
        } else {
            Label::Normal
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Nb,
    Arf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lr, ModelKind::Nb, ModelKind::Arf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Nb => "nb",
            ModelKind::Arf => "arf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(ModelKind::Lr),
            "nb" => Ok(ModelKind::Nb),
            "arf" => Ok(ModelKind::Arf),
            other => Err(ModelError::InvalidParameter(format!(
                "unknown model `{other}` (expected lr, nb or arf)"
            ))),
        }
    }
}

/// Hyperparameters for every model family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub lr: LogisticConfig,
    pub nb: NaiveBayesConfig,
    pub arf: ForestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Lr(LogisticRegression),
    Nb(GaussianNb),
    Arf(AdaptiveRandomForest),
}

impl Model {
    /// A fresh model; `seed` is used only by the forest.
    pub fn build(kind: ModelKind, params: &ModelParams, seed: u64) -> Result<Self, ModelError> {
        Ok(match kind {
            ModelKind::Lr => Model::Lr(LogisticRegression::new(params.lr)),
            ModelKind::Nb => Model::Nb(GaussianNb::new(params.nb)),
            ModelKind::Arf => Model::Arf(AdaptiveRandomForest::new(ForestConfig { seed, ..params.arf })?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lr(_) => ModelKind::Lr,
            Model::Nb(_) => ModelKind::Nb,
            Model::Arf(_) => ModelKind::Arf,
        }
    }

    pub fn to_snapshot(&self) -> Result<String, ModelError> {
        let snap = SnapshotRef {
            format: SNAPSHOT_FORMAT,
            version: SNAPSHOT_VERSION,
            model: self,
        };
        serde_json::to_string(&snap).map_err(|e| ModelError::Snapshot(e.to_string()))
    }

    pub fn from_snapshot(json: &str) -> Result<Self, ModelError> {
        let snap: Snapshot = serde_json::from_str(json).map_err(|e| ModelError::Snapshot(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(ModelError::Snapshot(format!("unexpected format `{}`", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(ModelError::Snapshot(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        Ok(snap.model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_snapshot()?).map_err(|e| ModelError::Snapshot(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ModelError::Snapshot(format!("{}: {e}", path.display())))?;
        Self::from_snapshot(&text)
    }
}

const SNAPSHOT_FORMAT: &str = "optidrift-model";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a Model,
}

#[derive(Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    model: Model,
}

impl OnlineClassifier for Model {
    fn score_one(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        match self {
            Model::Lr(m) => m.score_one(x),
            Model::Nb(m) => m.score_one(x),
            Model::Arf(m) => m.score_one(x),
        }
    }

    fn learn_one(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        match self {
            Model::Lr(m) => m.learn_one(x, y),
            Model::Nb(m) => m.learn_one(x, y),
            Model::Arf(m) => m.learn_one(x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn trained(kind: ModelKind) -> Model {
        let mut m = Model::build(kind, &ModelParams::default(), 11).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..800 {
            let o: f64 = rng.random_range(10.0..30.0);
            let x = FeatureVector([1e-9, 35.0 + rng.random_range(-0.5..0.5), 1e-4, o]);
            m.learn_one(&x, if o < 20.0 { Label::Failure } else { Label::Normal })
                .unwrap();
        }
        m
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("LR".parse::<ModelKind>().unwrap(), ModelKind::Lr);
        assert_eq!(" arf".parse::<ModelKind>().unwrap(), ModelKind::Arf);
        assert!("svm".parse::<ModelKind>().is_err());
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
    }

    #[test]
    fn snapshot_round_trip_preserves_scores() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ModelKind::ALL {
            let m = trained(kind);
            let path = dir.path().join(format!("{kind}.json"));
            m.save(&path).unwrap();
            let back = Model::load(&path).unwrap();
            assert_eq!(back.kind(), kind);
            for o in [12.0, 19.9, 20.1, 28.0] {
                let x = FeatureVector([1e-9, 35.0, 1e-4, o]);
                assert_eq!(m.score_one(&x).unwrap(), back.score_one(&x).unwrap());
            }
        }
    }

    #[test]
    fn restored_model_keeps_learning_identically() {
        let mut a = trained(ModelKind::Arf);
        let mut b = Model::from_snapshot(&a.to_snapshot().unwrap()).unwrap();
        let x = FeatureVector([1e-9, 35.0, 1e-4, 14.0]);
        for _ in 0..100 {
            a.learn_one(&x, Label::Failure).unwrap();
            b.learn_one(&x, Label::Failure).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn snapshot_rejects_other_versions() {
        let s = trained(ModelKind::Lr).to_snapshot().unwrap();
        let bumped = s.replace("\"version\":1", "\"version\":2");
        assert!(matches!(Model::from_snapshot(&bumped), Err(ModelError::Snapshot(_))));
        assert!(Model::from_snapshot("{}").is_err());
    }
}

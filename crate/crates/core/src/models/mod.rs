//! Training engines: logistic regression, gradient boosted trees, and a
//! one-vs-rest wrapper for multiclass problems.

pub mod gbdt;
pub mod logreg;
pub mod multiclass;
pub mod persist;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

pub use gbdt::{fit_gbdt, train_gbdt, GbdtConfig, GbdtModel, GbdtTrace};
pub use logreg::{fit_logreg, train_logreg, LinearModel, LogisticObjective, LrConfig, LrTrace};
pub use multiclass::{train_multiclass, MulticlassModel};
pub use persist::{load_model, save_model, SavedModel};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) fn check_binary_targets(x: &FeatureMatrix, y: &[bool]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidInput("need at least two training samples".into()));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Engine choice plus its hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum EngineConfig {
    Logreg(LrConfig),
    Gbdt(GbdtConfig),
}

impl EngineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EngineConfig::Logreg(_) => "logreg",
            EngineConfig::Gbdt(_) => "gbdt",
        }
    }
}

/// A trained binary classifier of either engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum BinaryModel {
    Logreg(LinearModel),
    Gbdt(GbdtModel),
    /// Fixed probability, used when a one-vs-rest class never (or always)
    /// occurs in the training labels.
    Constant {
        probability: f64,
        fingerprint: String,
    },
}

impl BinaryModel {
    pub fn train(x: &FeatureMatrix, y: &[bool], engine: &EngineConfig) -> Result<Self> {
        match engine {
            EngineConfig::Logreg(cfg) => train_logreg(x, y, cfg).map(BinaryModel::Logreg),
            EngineConfig::Gbdt(cfg) => train_gbdt(x, y, cfg).map(BinaryModel::Gbdt),
        }
    }

    pub fn fingerprint(&self) -> &str {
        match self {
            BinaryModel::Logreg(m) => &m.fingerprint,
            BinaryModel::Gbdt(m) => &m.fingerprint,
            BinaryModel::Constant { fingerprint, .. } => fingerprint,
        }
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        match self {
            BinaryModel::Logreg(m) => m.predict_proba(x),
            BinaryModel::Gbdt(m) => m.predict_proba(x),
            BinaryModel::Constant {
                probability,
                fingerprint,
            } => {
                if x.fingerprint() != fingerprint {
                    return Err(Error::LayoutMismatch {
                        expected: fingerprint.clone(),
                        found: x.fingerprint().to_string(),
                    });
                }
                Ok(*probability)
            }
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<bool> {
        self.predict_proba(x).map(|p| p >= 0.5)
    }
}

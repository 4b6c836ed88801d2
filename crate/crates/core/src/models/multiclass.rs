//! One-vs-rest multiclass classification.
//!
//! With `K > 2` classes one binary model is trained per class and the
//! prediction is the class with the highest probability, ties going to
//! the class declared first. With `K = 2` a single binary model is
//! trained for the second class and the class probabilities are
//! `[1 - p, p]`, so the decision equals the binary model's.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BinaryModel, EngineConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub labels: Vec<String>,
    pub fingerprint: String,
    /// One model per class, or a single model for the second class when
    /// there are exactly two classes.
    pub models: Vec<BinaryModel>,
}

/// Trains the one-vs-rest ensemble. `y[i]` indexes into `labels`.
pub fn train_multiclass(
    x: &FeatureMatrix,
    y: &[usize],
    labels: &[String],
    engine: &EngineConfig,
) -> Result<MulticlassModel> {
    if labels.len() < 2 {
        return Err(Error::InvalidInput(
            "multiclass training needs at least two classes".into(),
        ));
    }
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= labels.len()) {
        return Err(Error::InvalidInput(format!("class index {bad} out of range")));
    }
    let classes: Vec<usize> = if labels.len() == 2 {
        vec![1]
    } else {
        (0..labels.len()).collect()
    };
    let models = classes
        .par_iter()
        .map(|&k| {
            let yk: Vec<bool> = y.iter().map(|&c| c == k).collect();
            let positives = yk.iter().filter(|&&b| b).count();
            if positives == 0 || positives == yk.len() {
                log::warn!(
                    "class `{}` has {positives} of {} training samples; using a constant model",
                    labels[k],
                    yk.len()
                );
                return Ok(BinaryModel::Constant {
                    probability: if positives == 0 { 0.0 } else { 1.0 },
                    fingerprint: x.fingerprint().to_string(),
                });
            }
            BinaryModel::train(x, &yk, engine)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel {
        labels: labels.to_vec(),
        fingerprint: x.fingerprint().to_string(),
        models,
    })
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl MulticlassModel {
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if self.labels.len() == 2 {
            let p = self.models[0].predict_proba(x)?;
            return Ok(vec![1.0 - p, p]);
        }
        self.models.iter().map(|m| m.predict_proba(x)).collect()
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        self.predict_proba(x).map(|p| argmax(&p))
    }

    pub fn predict_label(&self, x: &FeatureVector) -> Result<&str> {
        self.predict(x).map(|k| self.labels[k].as_str())
    }
}

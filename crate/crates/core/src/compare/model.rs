use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::num::logistic;

/// Linear model on feature differences. There is no bias term, so
/// `probability(a, b) + probability(b, a) == 1` holds exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparatorModel {
    pub weights: [f64; 5],
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub trained_on: usize,
}

impl Default for ComparatorModel {
    fn default() -> Self {
        ComparatorModel::new([0.0; 5])
    }
}

impl ComparatorModel {
    pub fn new(weights: [f64; 5]) -> Self {
        ComparatorModel {
            weights,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            trained_on: 0,
        }
    }

    pub fn margin(&self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        let (a, b) = (a.to_array(), b.to_array());
        (0..5).map(|k| self.weights[k] * (a[k] - b[k])).sum()
    }

    /// Probability that `a` is blurrier than `b`.
    pub fn probability(&self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        logistic(self.margin(a, b))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ComparatorModel = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            what: "comparator model",
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if model.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
            return Err(Error::Malformed {
                what: "comparator model",
                path: path.to_path_buf(),
                message: format!("feature names {:?} do not match {:?}", model.feature_names, FEATURE_NAMES),
            });
        }
        Ok(model)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Labelled pair: `label == 1` means `first` is blurrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub first: FeatureVector,
    pub second: FeatureVector,
    pub label: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Training {
    pub model: ComparatorModel,
    /// Mean BCE at the start of each epoch, then once more after the last.
    pub losses: Vec<f64>,
    pub final_lr: f64,
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Full-batch gradient descent on mean BCE, starting from zero weights.
///
/// Differences are scaled per feature by their root mean square so one
/// learning rate suits all five features; the weights are mapped back to raw
/// units on return. A step that raises the loss is rejected and the rate
/// halved, so the loss sequence never increases.
pub fn train_feature_comparator(pairs: &[TrainingPair], epochs: usize, lr: f64) -> Result<Training> {
    if pairs.is_empty() {
        return Err(Error::param("training needs at least one pair"));
    }
    if !(lr >= 0.0) || !lr.is_finite() {
        return Err(Error::param(format!("learning rate must be finite and >= 0, got {lr}")));
    }
    if let Some(p) = pairs.iter().find(|p| p.label != 0.0 && p.label != 1.0) {
        return Err(Error::param(format!("labels must be 0 or 1, got {}", p.label)));
    }
    let diffs: Vec<[f64; 5]> = pairs
        .iter()
        .map(|p| {
            let (a, b) = (p.first.to_array(), p.second.to_array());
            std::array::from_fn(|k| a[k] - b[k])
        })
        .collect();
    if diffs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("non-finite feature in training set"));
    }
    let n = pairs.len() as f64;
    let scale: [f64; 5] = std::array::from_fn(|k| {
        let rms = (diffs.iter().map(|d| d[k] * d[k]).sum::<f64>() / n).sqrt();
        if rms > 0.0 {
            rms
        } else {
            1.0
        }
    });
    let z: Vec<[f64; 5]> = diffs
        .iter()
        .map(|d| std::array::from_fn(|k| d[k] / scale[k]))
        .collect();
    let labels: Vec<f64> = pairs.iter().map(|p| p.label).collect();

    let loss_and_grad = |u: &[f64; 5]| {
        let mut loss = 0.0;
        let mut grad = [0.0; 5];
        for (zi, &y) in z.iter().zip(&labels) {
            let p = logistic((0..5).map(|k| u[k] * zi[k]).sum::<f64>());
            loss += bce(p, y);
            for k in 0..5 {
                grad[k] += (p - y) * zi[k];
            }
        }
        (loss / n, grad.map(|g| g / n))
    };

    let mut u = [0.0; 5];
    let mut lr = lr;
    let (mut loss, mut grad) = loss_and_grad(&u);
    let mut losses = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        losses.push(loss);
        if lr == 0.0 {
            continue;
        }
        loop {
            let cand: [f64; 5] = std::array::from_fn(|k| u[k] - lr * grad[k]);
            let (cl, cg) = loss_and_grad(&cand);
            if cl <= loss {
                u = cand;
                loss = cl;
                grad = cg;
                break;
            }
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
        }
    }
    losses.push(loss);

    let mut model = ComparatorModel::new(std::array::from_fn(|k| u[k] / scale[k]));
    model.trained_on = pairs.len();
    Ok(Training {
        model,
        losses,
        final_lr: lr,
    })
}

/// Fraction of pairs whose label agrees with `probability >= 0.5`.
pub fn pair_accuracy(model: &ComparatorModel, pairs: &[TrainingPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs
        .iter()
        .filter(|p| (model.probability(&p.first, &p.second) >= 0.5) == (p.label == 1.0))
        .count();
    hits as f64 / pairs.len() as f64
}

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPSILON, 1 - EPSILON]` before taking logs.
pub const EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over every element of `-[y ln p + (1-y) ln(1-p)]`.
    BinaryCe,
    /// Mean over the batch of `-Σ_k y_k ln p_k`.
    CategoricalCe,
}

/// Returns the loss and its gradient with respect to `pred`.
pub fn loss(pred: &Array2<f64>, target: &Array2<f64>, kind: LossKind) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Shape("empty prediction batch".into()));
    }
    let clamp = |p: f64| p.clamp(EPSILON, 1.0 - EPSILON);
    // zero gradient where the clamp is active
    let inside = |p: f64| (EPSILON..=1.0 - EPSILON).contains(&p);
    match kind {
        LossKind::BinaryCe => {
            let n = pred.len() as f64;
            let total: f64 = Zip::from(pred).and(target).fold(0.0, |acc, &p, &y| {
                let p = clamp(p);
                acc - (y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            });
            let grad = Zip::from(pred).and(target).map_collect(|&p, &y| {
                if inside(p) {
                    (-y / p + (1.0 - y) / (1.0 - p)) / n
                } else {
                    0.0
                }
            });
            Ok((total / n, grad))
        }
        LossKind::CategoricalCe => {
            let n = pred.nrows() as f64;
            let total: f64 = Zip::from(pred)
                .and(target)
                .fold(0.0, |acc, &p, &y| acc - y * clamp(p).ln());
            let grad = Zip::from(pred).and(target).map_collect(|&p, &y| {
                if inside(p) {
                    -y / p / n
                } else {
                    0.0
                }
            });
            Ok((total / n, grad))
        }
    }
}

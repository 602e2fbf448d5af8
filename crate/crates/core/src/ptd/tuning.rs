//! Exhaustive grid search in place of a hyperparameter-optimization service.

use serde::Serialize;

use crate::evalstats::f1_scores;
use crate::taxonomy::TypeSet;

use super::{decide, PtdError, CLASS_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub threshold: f64,
}

impl GridPoint {
    /// Cartesian product in row-major order (learning rate outermost).
    pub fn product(learning_rates: &[f64], weight_decays: &[f64], thresholds: &[f64]) -> Vec<Self> {
        let mut out = Vec::new();
        for &learning_rate in learning_rates {
            for &weight_decay in weight_decays {
                for &threshold in thresholds {
                    out.push(Self { learning_rate, weight_decay, threshold });
                }
            }
        }
        out
    }
}

/// Evaluates `score` at every point and returns the first maximiser.
pub fn grid_search<P: Clone>(grid: &[P], mut score: impl FnMut(&P) -> f64) -> Option<(P, f64)> {
    let mut best: Option<(P, f64)> = None;
    for p in grid {
        let s = score(p);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((p.clone(), s));
        }
    }
    best
}

/// Decision threshold maximizing macro F1 over the ten classes.
pub fn tune_threshold(
    logits: &[[f64; CLASS_COUNT]],
    gold: &[TypeSet],
    thresholds: &[f64],
) -> Result<Option<(f64, f64)>, PtdError> {
    if logits.len() != gold.len() {
        return Err(PtdError::LengthMismatch(logits.len(), gold.len()));
    }
    let mut failure = None;
    let best = grid_search(thresholds, |&t| {
        let pred: Vec<TypeSet> = logits.iter().map(|z| decide(z, t)).collect();
        match f1_scores(&pred, gold, TypeSet::top10()) {
            Ok(r) => r.macro_f1,
            Err(e) => {
                failure = Some(e);
                f64::NEG_INFINITY
            }
        }
    });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(best),
    }
}

//! Paraphrase-type detection: weighted multilabel loss, thresholding, a
//! rule-based baseline detector and evaluation in the per-class F1 table shape.
//!
//! Logit vectors are aligned to [`TypeSet::top10`] in ascending id order.

mod heuristic;
mod preds;
mod tuning;

use crate::corpus::SentencePairRecord;
use crate::evalstats::{f1_scores, f1_with_ci, EvalError, F1Report, BOOTSTRAP_LEVEL, BOOTSTRAP_RESAMPLES};
use crate::prefloss::{sigmoid, softplus};
use crate::taxonomy::{ParaphraseType, TypeSet};

pub use heuristic::{edit_distance, heuristic_detect, RULE_TYPES};
pub use preds::{read_ptd_preds, PtdPrediction};
pub use tuning::{grid_search, tune_threshold, GridPoint};

pub const CLASS_COUNT: usize = 10;
pub const WEIGHT_MIN: f64 = 0.1;
pub const WEIGHT_MAX: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PtdError {
    #[error("all class counts are zero")]
    AllZero,
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A sentence pair with optional detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionExample {
    pub pair: SentencePairRecord,
    pub logits: Option<[f64; CLASS_COUNT]>,
    pub predicted: Option<TypeSet>,
}

/// Positive-class weights, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `w_c = N / (K max(n_c, 1))`, clamped to `[0.1, 50]`.
pub fn class_weights(counts: &[u64]) -> Result<ClassWeights, PtdError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(PtdError::AllZero);
    }
    let k = counts.len() as f64;
    Ok(ClassWeights(
        counts
            .iter()
            .map(|&n| (total as f64 / (k * n.max(1) as f64)).clamp(WEIGHT_MIN, WEIGHT_MAX))
            .collect(),
    ))
}

fn check_lengths(logits: &[f64], targets: &[bool], weights: &ClassWeights) -> Result<(), PtdError> {
    if logits.len() != targets.len() {
        return Err(PtdError::LengthMismatch(logits.len(), targets.len()));
    }
    if logits.len() != weights.0.len() {
        return Err(PtdError::LengthMismatch(logits.len(), weights.0.len()));
    }
    Ok(())
}

/// Mean over classes of `-[w t ln σ(z) + (1 - t) ln(1 - σ(z))]`.
pub fn weighted_bce_loss(logits: &[f64], targets: &[bool], weights: &ClassWeights) -> Result<f64, PtdError> {
    check_lengths(logits, targets, weights)?;
    if logits.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = logits
        .iter()
        .zip(targets)
        .zip(&weights.0)
        .map(|((&z, &t), &w)| if t { w * softplus(-z) } else { softplus(z) })
        .sum();
    Ok(sum / logits.len() as f64)
}

/// Gradient of [`weighted_bce_loss`] with respect to the logits.
pub fn weighted_bce_grad(logits: &[f64], targets: &[bool], weights: &ClassWeights) -> Result<Vec<f64>, PtdError> {
    check_lengths(logits, targets, weights)?;
    let k = logits.len() as f64;
    Ok(logits
        .iter()
        .zip(targets)
        .zip(&weights.0)
        .map(|((&z, &t), &w)| if t { -w * sigmoid(-z) / k } else { sigmoid(z) / k })
        .collect())
}

/// Classes whose probability reaches `threshold`.
pub fn decide(logits: &[f64; CLASS_COUNT], threshold: f64) -> TypeSet {
    TypeSet::top10()
        .iter()
        .zip(logits)
        .filter(|(_, &z)| sigmoid(z) >= threshold)
        .map(|(t, _)| t)
        .collect()
}

/// Per-class F1 over the ten detected types with bootstrap intervals.
pub fn evaluate_ptd(predicted: &[TypeSet], gold: &[TypeSet], seed: u64) -> Result<F1Report, PtdError> {
    if predicted.len() != gold.len() {
        return Err(PtdError::LengthMismatch(predicted.len(), gold.len()));
    }
    if gold.len() < 2 {
        return Ok(f1_scores(predicted, gold, TypeSet::top10())?);
    }
    Ok(f1_with_ci(predicted, gold, TypeSet::top10(), BOOTSTRAP_RESAMPLES, BOOTSTRAP_LEVEL, seed)?)
}

/// Agreement of detector output with human validity judgments.
///
/// Each example has a requested type and a human verdict on whether the
/// paraphrase shows it. The verdict is the gold label for that type and
/// membership of the type in the detector output is the prediction.
pub fn agreement_with_humans(
    predicted: &[TypeSet],
    human: &[(ParaphraseType, bool)],
) -> Result<F1Report, PtdError> {
    if predicted.len() != human.len() {
        return Err(PtdError::LengthMismatch(predicted.len(), human.len()));
    }
    let classes: TypeSet = human.iter().map(|(t, _)| *t).collect();
    let gold: Vec<TypeSet> = human
        .iter()
        .map(|&(t, ok)| if ok { TypeSet::from(t) } else { TypeSet::empty() })
        .collect();
    let pred: Vec<TypeSet> = predicted
        .iter()
        .zip(human)
        .map(|(p, &(t, _))| if p.contains(t) { TypeSet::from(t) } else { TypeSet::empty() })
        .collect();
    Ok(f1_scores(&pred, &gold, classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn weight_examples() {
        assert_eq!(class_weights(&[100, 100]).unwrap().as_slice(), &[1.0, 1.0]);
        let w = class_weights(&[150, 50]).unwrap();
        assert!((w.as_slice()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w.as_slice()[1] - 2.0).abs() < 1e-12);
        // 10 / (2 * 1) = 5 for the empty class; the other gets 10 / 20 = 0.5
        assert_eq!(class_weights(&[0, 10]).unwrap().as_slice(), &[5.0, 0.5]);
        assert_eq!(class_weights(&[0, 1000]).unwrap().as_slice(), &[50.0, 0.5]);
        // the floor needs more than ten classes: 1000 / (20 * 1000) = 0.05
        let mut many = vec![0u64; 20];
        many[0] = 1000;
        assert_eq!(class_weights(&many).unwrap().as_slice()[0], WEIGHT_MIN);
        assert_eq!(class_weights(&[0, 0]), Err(PtdError::AllZero));
    }

    #[test]
    fn bce_examples() {
        let one = ClassWeights::uniform(1);
        assert!((weighted_bce_loss(&[0.0], &[true], &one).unwrap() - LN_2).abs() < 1e-15);
        let two = ClassWeights(vec![2.0]);
        assert!((weighted_bce_loss(&[0.0], &[true], &two).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert!(weighted_bce_loss(&[30.0], &[true], &one).unwrap() < 1e-12);
        assert!(weighted_bce_loss(&[-800.0], &[true], &one).unwrap().is_finite());
        assert!(matches!(weighted_bce_loss(&[0.0], &[true, false], &one), Err(PtdError::LengthMismatch(1, 2))));
    }

    #[test]
    fn decide_examples() {
        assert!(decide(&[-10.0; 10], 0.5).is_empty());
        let mut z = [-10.0; 10];
        z[3] = 0.0;
        assert_eq!(decide(&z, 0.5), TypeSet::from(ParaphraseType::INFLECTIONAL_CHANGES));
        let mixed = [2.0, -2.0, 2.0, -2.0, -2.0, -2.0, -2.0, -2.0, -2.0, 2.0];
        let expected: TypeSet = [ParaphraseType::ADDITION_DELETION, ParaphraseType::DERIVATIONAL_CHANGES, ParaphraseType::SYNTHETIC_ANALYTIC]
            .into_iter()
            .collect();
        assert_eq!(decide(&mixed, 0.5), expected);
    }

    #[test]
    fn evaluation_of_perfect_predictions() {
        let gold: Vec<TypeSet> = TypeSet::top10().iter().map(TypeSet::from).collect();
        let r = evaluate_ptd(&gold, &gold, 1).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.per_class.len(), 10);
        assert!(r.to_csv().starts_with("Class,F1,CI Lower,CI Upper,Support\n"));
    }

    #[test]
    fn human_agreement() {
        let a = ParaphraseType::ADDITION_DELETION;
        let o = ParaphraseType::CHANGE_OF_ORDER;
        let human = [(a, true), (a, false), (o, true), (a, true), (o, false)];
        let exact: Vec<TypeSet> = human.iter().map(|&(t, ok)| if ok { t.into() } else { TypeSet::empty() }).collect();
        let r = agreement_with_humans(&exact, &human).unwrap();
        assert!(r.per_class.iter().all(|row| row.f1 == 1.0));

        let silent = vec![TypeSet::empty(); 5];
        let r = agreement_with_humans(&silent, &human).unwrap();
        assert!(r.per_class.iter().all(|row| row.f1 == 0.0));

        // Addition/Deletion: TP 1 (item 0), FP 1 (item 1), FN 1 (item 3) -> 2/4
        // Change of order: TP 0, FP 1 (item 4), FN 1 (item 2) -> 0
        let mixed = vec![a.into(), a.into(), TypeSet::empty(), o.into(), o.into()];
        let r = agreement_with_humans(&mixed, &human).unwrap();
        assert_eq!(r.row(a).unwrap().f1, 0.5);
        assert_eq!(r.row(o).unwrap().f1, 0.0);
        assert_eq!(r.row(a).unwrap().support, 2);
    }

    proptest! {
        #[test]
        fn unit_weights_give_plain_bce(z in proptest::collection::vec(-10.0f64..10.0, 1..10), seed in any::<u64>()) {
            let t: Vec<bool> = (0..z.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let plain: f64 = z.iter().zip(&t).map(|(&z, &t)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -(if t { p.ln() } else { (1.0 - p).ln() })
            }).sum::<f64>() / z.len() as f64;
            let w = weighted_bce_loss(&z, &t, &ClassWeights::uniform(z.len())).unwrap();
            prop_assert!((w - plain).abs() < 1e-9);
        }

        #[test]
        fn bce_gradient_matches_differences(z in proptest::collection::vec(-6.0f64..6.0, 1..6), w in 0.1f64..50.0) {
            let t: Vec<bool> = (0..z.len()).map(|i| i % 2 == 0).collect();
            let weights = ClassWeights(vec![w; z.len()]);
            let g = weighted_bce_grad(&z, &t, &weights).unwrap();
            for k in 0..z.len() {
                let (mut up, mut down) = (z.clone(), z.clone());
                up[k] += 1e-6;
                down[k] -= 1e-6;
                let fd = (weighted_bce_loss(&up, &t, &weights).unwrap() - weighted_bce_loss(&down, &t, &weights).unwrap()) / 2e-6;
                prop_assert!((g[k] - fd).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }

        #[test]
        fn decide_is_monotone(z in proptest::array::uniform10(-5.0f64..5.0), k in 0usize..10, bump in 0.0f64..5.0) {
            let before = decide(&z, 0.5);
            let mut raised = z;
            raised[k] += bump;
            prop_assert!(before.is_subset(&decide(&raised, 0.5)));
        }
    }
}

//! Preference-optimization losses over externally scored sequences.
//!
//! Everything here works on per-token natural-log probabilities, so any model
//! that can score a continuation (the tiny in-crate model or an external one via
//! `scored.jsonl`) plugs in unchanged.

mod scored;

use serde::{Deserialize, Serialize};

pub use scored::{read_scored, write_scored, ScoredLine, ScoredRole};

#[derive(Debug, thiserror::Error)]
pub enum PrefLossError {
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid scored sequence: {0}")]
    InvalidSequence(String),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("id {0:?} lacks a chosen or rejected side")]
    Unpaired(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which model's log-probabilities to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Policy,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefMethod {
    Dpo,
    Ipo,
}

/// A continuation scored token by token under the policy and the reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSequence {
    token_ids: Vec<u32>,
    policy_logprobs: Vec<f64>,
    reference_logprobs: Vec<f64>,
}

impl ScoredSequence {
    pub fn new(
        token_ids: Vec<u32>,
        policy_logprobs: Vec<f64>,
        reference_logprobs: Vec<f64>,
    ) -> Result<Self, PrefLossError> {
        let n = token_ids.len();
        if n == 0 {
            return Err(PrefLossError::InvalidSequence("no tokens".into()));
        }
        if policy_logprobs.len() != n || reference_logprobs.len() != n {
            return Err(PrefLossError::InvalidSequence(format!(
                "{n} tokens but {} policy and {} reference logprobs",
                policy_logprobs.len(),
                reference_logprobs.len()
            )));
        }
        if let Some(bad) = policy_logprobs
            .iter()
            .chain(&reference_logprobs)
            .find(|lp| !lp.is_finite() || **lp > 0.0)
        {
            return Err(PrefLossError::InvalidSequence(format!(
                "log-probability {bad} is not finite and non-positive"
            )));
        }
        Ok(Self { token_ids, policy_logprobs, reference_logprobs })
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn logprobs(&self, which: Scorer) -> &[f64] {
        match which {
            Scorer::Policy => &self.policy_logprobs,
            Scorer::Reference => &self.reference_logprobs,
        }
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefBatchItem {
    pub chosen: ScoredSequence,
    pub rejected: ScoredSequence,
}

impl PrefBatchItem {
    /// Difference of policy-vs-reference log-ratios, chosen minus rejected.
    pub fn log_ratio_gap(&self) -> f64 {
        let ratio = |s: &ScoredSequence| {
            sequence_logprob(s, Scorer::Policy) - sequence_logprob(s, Scorer::Reference)
        };
        ratio(&self.chosen) - ratio(&self.rejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpoOutcome {
    pub loss: f64,
    /// β-scaled implicit reward difference.
    pub margin: f64,
    pub correct: bool,
}

/// Training diagnostics averaged over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefStats {
    pub mean_loss: f64,
    pub reward_margin: f64,
    pub reward_accuracy: f64,
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sequence_logprob(s: &ScoredSequence, which: Scorer) -> f64 {
    s.logprobs(which).iter().sum()
}

fn check_beta(beta: f64) -> Result<(), PrefLossError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(PrefLossError::NonPositiveBeta(beta))
    }
}

/// DPO loss for a precomputed log-ratio gap `h`.
pub fn dpo_from_gap(h: f64, beta: f64) -> DpoOutcome {
    DpoOutcome { loss: softplus(-beta * h), margin: beta * h, correct: h > 0.0 }
}

/// d(DPO loss)/dh.
pub fn dpo_gap_grad(h: f64, beta: f64) -> f64 {
    -beta * sigmoid(-beta * h)
}

/// IPO loss for a precomputed log-ratio gap `h`.
pub fn ipo_from_gap(h: f64, beta: f64) -> f64 {
    let d = h - 1.0 / (2.0 * beta);
    d * d
}

/// d(IPO loss)/dh.
pub fn ipo_gap_grad(h: f64, beta: f64) -> f64 {
    2.0 * (h - 1.0 / (2.0 * beta))
}

pub fn dpo_loss(item: &PrefBatchItem, beta: f64) -> Result<DpoOutcome, PrefLossError> {
    check_beta(beta)?;
    Ok(dpo_from_gap(item.log_ratio_gap(), beta))
}

pub fn ipo_loss(item: &PrefBatchItem, beta: f64) -> Result<f64, PrefLossError> {
    check_beta(beta)?;
    Ok(ipo_from_gap(item.log_ratio_gap(), beta))
}

/// Pairwise Bradley-Terry loss `-ln σ(r_chosen - r_rejected)`.
pub fn reward_bt_loss(r_chosen: f64, r_rejected: f64) -> f64 {
    softplus(r_rejected - r_chosen)
}

/// Gradient of [`reward_bt_loss`] with respect to `(r_chosen, r_rejected)`.
pub fn reward_bt_grad(r_chosen: f64, r_rejected: f64) -> (f64, f64) {
    let g = -sigmoid(r_rejected - r_chosen);
    (g, -g)
}

/// Loss of one item under `method`, plus dLoss/dh.
pub fn method_loss(method: PrefMethod, h: f64, beta: f64) -> (f64, f64) {
    match method {
        PrefMethod::Dpo => (dpo_from_gap(h, beta).loss, dpo_gap_grad(h, beta)),
        PrefMethod::Ipo => (ipo_from_gap(h, beta), ipo_gap_grad(h, beta)),
    }
}

/// Gradients of the item loss with respect to every per-token policy
/// log-probability, as `(chosen, rejected)`.
pub fn policy_logprob_grad(
    item: &PrefBatchItem,
    method: PrefMethod,
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>), PrefLossError> {
    check_beta(beta)?;
    let (_, dh) = method_loss(method, item.log_ratio_gap(), beta);
    Ok((vec![dh; item.chosen.len()], vec![-dh; item.rejected.len()]))
}

/// Accumulates per-item gaps into batch statistics (left-to-right means).
pub fn stats_from_gaps(gaps: &[f64], method: PrefMethod, beta: f64) -> Result<PrefStats, PrefLossError> {
    check_beta(beta)?;
    if gaps.is_empty() {
        return Err(PrefLossError::EmptyInput);
    }
    let (mut loss, mut margin, mut correct) = (0.0, 0.0, 0usize);
    for &h in gaps {
        loss += method_loss(method, h, beta).0;
        margin += beta * h;
        correct += usize::from(h > 0.0);
    }
    let n = gaps.len() as f64;
    Ok(PrefStats {
        mean_loss: loss / n,
        reward_margin: margin / n,
        reward_accuracy: correct as f64 / n,
    })
}

pub fn batch_stats(
    items: &[PrefBatchItem],
    method: PrefMethod,
    beta: f64,
) -> Result<PrefStats, PrefLossError> {
    let gaps: Vec<f64> = items.iter().map(PrefBatchItem::log_ratio_gap).collect();
    stats_from_gaps(&gaps, method, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn seq(policy: &[f64], reference: &[f64]) -> ScoredSequence {
        let ids = (0..policy.len() as u32).collect();
        ScoredSequence::new(ids, policy.to_vec(), reference.to_vec()).unwrap()
    }

    /// An item whose chosen side has log-ratio `dw` and rejected side `dl`.
    fn item(dw: f64, dl: f64) -> PrefBatchItem {
        PrefBatchItem { chosen: seq(&[-3.0 + dw], &[-3.0]), rejected: seq(&[-3.0 + dl], &[-3.0]) }
    }

    // -ln σ(x) through the plain definition, for moderate x only.
    fn naive_nls(x: f64) -> f64 {
        -(1.0 / (1.0 + (-x).exp())).ln()
    }

    #[test]
    fn sequence_sums() {
        let s = seq(&[-0.5, -1.0, -0.25], &[-1.0, -1.0, -1.0]);
        assert_eq!(sequence_logprob(&s, Scorer::Policy), -1.75);
        assert_eq!(sequence_logprob(&s, Scorer::Reference), -3.0);
        assert_eq!(sequence_logprob(&seq(&[-2.0], &[-2.0]), Scorer::Policy), -2.0);
        assert_eq!(sequence_logprob(&seq(&[0.0, 0.0], &[0.0, 0.0]), Scorer::Policy), 0.0);
    }

    #[test]
    fn invalid_sequences_are_rejected() {
        assert!(ScoredSequence::new(vec![], vec![], vec![]).is_err());
        assert!(ScoredSequence::new(vec![1], vec![0.1], vec![-1.0]).is_err());
        assert!(ScoredSequence::new(vec![1], vec![-1.0], vec![f64::NAN]).is_err());
        assert!(ScoredSequence::new(vec![1, 2], vec![-1.0], vec![-1.0, -1.0]).is_err());
    }

    #[test]
    fn dpo_reference_values() {
        let at_ref = dpo_loss(&item(0.0, 0.0), 0.2).unwrap();
        assert!((at_ref.loss - LN_2).abs() < 1e-12);
        assert_eq!(at_ref.margin, 0.0);
        assert!(!at_ref.correct);

        let out = dpo_loss(&item(1.0, -1.0), 0.2).unwrap();
        assert!((out.margin - 0.4).abs() < 1e-12);
        assert!((out.loss - naive_nls(0.4)).abs() < 1e-12);
        assert!((out.loss - 0.513015).abs() < 1e-6);
        assert!(out.correct);

        assert!(dpo_from_gap(1e6, 0.2).loss < 1e-300);
        assert_eq!(dpo_from_gap(-1e6, 0.2).loss, 0.2e6);
    }

    #[test]
    fn ipo_reference_values() {
        assert_eq!(ipo_from_gap(2.5, 0.2), 0.0);
        assert!((ipo_loss(&item(0.0, 0.0), 0.2).unwrap() - 6.25).abs() < 1e-12);
        assert!((ipo_loss(&item(1.0, -1.0), 0.2).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bradley_terry_values() {
        assert!((reward_bt_loss(0.7, 0.7) - LN_2).abs() < 1e-12);
        assert!((reward_bt_loss(1.0, 0.0) - naive_nls(1.0)).abs() < 1e-12);
        assert!((reward_bt_loss(1.0, 0.0) - 0.313262).abs() < 1e-6);
        assert!((reward_bt_loss(0.0, 1.0) - 1.313262).abs() < 1e-6);
        assert!((reward_bt_loss(0.0, 1.0) - (1.0 + reward_bt_loss(1.0, 0.0))).abs() < 1e-12);
    }

    #[test]
    fn beta_must_be_positive() {
        for beta in [0.0, -0.1, f64::NAN] {
            assert!(matches!(dpo_loss(&item(0.0, 0.0), beta), Err(PrefLossError::NonPositiveBeta(_))));
            assert!(matches!(ipo_loss(&item(0.0, 0.0), beta), Err(PrefLossError::NonPositiveBeta(_))));
        }
    }

    #[test]
    fn batch_statistics() {
        let same = vec![item(0.0, 0.0), item(0.3, 0.3)];
        let s = batch_stats(&same, PrefMethod::Dpo, 0.2).unwrap();
        assert_eq!(s.reward_accuracy, 0.0);
        assert_eq!(s.reward_margin, 0.0);
        assert!((s.mean_loss - LN_2).abs() < 1e-12);

        let mixed = vec![item(0.5, -0.5), item(-0.5, 0.5)];
        let s = batch_stats(&mixed, PrefMethod::Dpo, 0.2).unwrap();
        assert!(s.reward_margin.abs() < 1e-15);
        assert_eq!(s.reward_accuracy, 0.5);

        assert!(matches!(batch_stats(&[], PrefMethod::Ipo, 0.2), Err(PrefLossError::EmptyInput)));
    }

    #[test]
    fn bt_gradient_matches_differences() {
        let (gc, gr) = reward_bt_grad(0.3, -0.4);
        let eps = 1e-6;
        let fc = (reward_bt_loss(0.3 + eps, -0.4) - reward_bt_loss(0.3 - eps, -0.4)) / (2.0 * eps);
        let fr = (reward_bt_loss(0.3, -0.4 + eps) - reward_bt_loss(0.3, -0.4 - eps)) / (2.0 * eps);
        assert!((gc - fc).abs() < 1e-8 && (gr - fr).abs() < 1e-8);
    }

    fn arb_seq(len: usize) -> impl Strategy<Value = ScoredSequence> {
        (
            proptest::collection::vec(-8.0f64..0.0, len),
            proptest::collection::vec(-8.0f64..0.0, len),
        )
            .prop_map(|(p, r)| seq(&p, &r))
    }

    fn arb_item() -> impl Strategy<Value = PrefBatchItem> {
        (1usize..6, 1usize..6)
            .prop_flat_map(|(a, b)| (arb_seq(a), arb_seq(b)))
            .prop_map(|(chosen, rejected)| PrefBatchItem { chosen, rejected })
    }

    proptest! {
        #[test]
        fn dpo_strictly_decreasing(h in -20.0f64..20.0, d in 0.01f64..5.0, beta in 0.05f64..2.0) {
            prop_assert!(dpo_from_gap(h + d, beta).loss < dpo_from_gap(h, beta).loss);
        }

        #[test]
        fn ipo_convex_with_minimum(h in -20.0f64..20.0, d in 0.01f64..5.0, beta in 0.05f64..2.0) {
            let m = 1.0 / (2.0 * beta);
            let mid = ipo_from_gap(h, beta);
            prop_assert!(ipo_from_gap(h - d, beta) + ipo_from_gap(h + d, beta) > 2.0 * mid);
            prop_assert!(ipo_from_gap(m, beta) <= mid);
        }

        #[test]
        fn dpo_pair_sum_at_least_2ln2(h in -30.0f64..30.0, beta in 0.05f64..2.0) {
            let s = dpo_from_gap(h, beta).loss + dpo_from_gap(-h, beta).loss;
            if h == 0.0 {
                prop_assert!((s - 2.0 * LN_2).abs() < 1e-12);
            } else {
                prop_assert!(s > 2.0 * LN_2);
            }
        }

        #[test]
        fn reference_shift_invariance(it in arb_item(), c in -3.0f64..0.0) {
            let shift = |s: &ScoredSequence| {
                let p = s.logprobs(Scorer::Policy).iter().map(|x| x + c).collect::<Vec<_>>();
                let r = s.logprobs(Scorer::Reference).iter().map(|x| x + c).collect::<Vec<_>>();
                seq(&p, &r)
            };
            let shifted = PrefBatchItem { chosen: shift(&it.chosen), rejected: it.rejected.clone() };
            prop_assert!((shifted.log_ratio_gap() - it.log_ratio_gap()).abs() < 1e-9);
        }

        #[test]
        fn correct_iff_positive_margin(it in arb_item(), beta in 0.01f64..5.0) {
            let out = dpo_loss(&it, beta).unwrap();
            prop_assert_eq!(out.correct, out.margin > 0.0);
        }

        #[test]
        fn stable_softplus_agrees_with_definition(x in -30.0f64..30.0) {
            prop_assert!((softplus(x) - (1.0 + x.exp()).ln()).abs() < 1e-12);
        }

        #[test]
        fn analytic_gradient_matches_differences(it in arb_item(), beta in 0.05f64..1.0, ipo in any::<bool>()) {
            let method = if ipo { PrefMethod::Ipo } else { PrefMethod::Dpo };
            let (gc, gr) = policy_logprob_grad(&it, method, beta).unwrap();
            let eps = 1e-5;
            let loss = |x: &PrefBatchItem| method_loss(method, x.log_ratio_gap(), beta).0;
            let perturb = |s: &ScoredSequence, k: usize, d: f64| {
                let mut p = s.logprobs(Scorer::Policy).to_vec();
                p[k] += d;
                ScoredSequence { token_ids: s.token_ids.clone(), policy_logprobs: p, reference_logprobs: s.reference_logprobs.clone() }
            };
            for (side, grads) in [(0, &gc), (1, &gr)] {
                for (k, &g) in grads.iter().enumerate() {
                    let mut up = it.clone();
                    let mut down = it.clone();
                    if side == 0 {
                        up.chosen = perturb(&it.chosen, k, eps);
                        down.chosen = perturb(&it.chosen, k, -eps);
                    } else {
                        up.rejected = perturb(&it.rejected, k, eps);
                        down.rejected = perturb(&it.rejected, k, -eps);
                    }
                    let fd = (loss(&up) - loss(&down)) / (2.0 * eps);
                    let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
                    prop_assert!(rel < 1e-4, "analytic {g} vs fd {fd}");
                }
            }
        }
    }
}

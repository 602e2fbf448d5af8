//! Supervised and preference training loops plus a finite-difference gradient check.

use serde::{Deserialize, Serialize};

use crate::corpus::{render_prompt, PreferenceRecord};
use crate::prefloss::{method_loss, stats_from_gaps, PrefBatchItem, PrefMethod, PrefStats};
use crate::rng::SeededRng;

use super::gru::{self, Layout};
use super::optim::{clip_grad_norm, AdamW, LrSchedule, Scheduler};
use super::{Encoded, TinyLmError, TinyModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta: f64,
    pub max_grad_norm: f64,
    pub scheduler: Scheduler,
    pub warmup_ratio: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Supervised fine-tuning defaults. None of these come from a published
    /// recipe; they are sized for the tiny model.
    pub fn sft() -> Self {
        Self {
            learning_rate: 1e-2,
            weight_decay: 0.0,
            beta: 0.2,
            max_grad_norm: 1.0,
            scheduler: Scheduler::Cosine,
            warmup_ratio: 0.0,
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }

    pub fn dpo() -> Self {
        Self {
            learning_rate: 1e-6,
            weight_decay: 0.4,
            beta: 0.2,
            max_grad_norm: 200.0,
            scheduler: Scheduler::Cosine,
            warmup_ratio: 0.0,
            ..Self::sft()
        }
    }

    /// IPO defaults. The gradient clip is not stated for IPO and is carried
    /// over from DPO.
    pub fn ipo() -> Self {
        Self {
            learning_rate: 5e-6,
            weight_decay: 0.02,
            beta: 0.2,
            max_grad_norm: 200.0,
            scheduler: Scheduler::Plateau,
            warmup_ratio: 0.2,
            ..Self::sft()
        }
    }

    pub fn for_method(method: PrefMethod) -> Self {
        match method {
            PrefMethod::Dpo => Self::dpo(),
            PrefMethod::Ipo => Self::ipo(),
        }
    }

    pub fn validate(&self) -> Result<(), TinyLmError> {
        let bad = |m: &str| Err(TinyLmError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return bad("warmup_ratio must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }
}

/// A preference pair with its prompt already rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefExample {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

impl PrefExample {
    pub fn from_record(r: &PreferenceRecord) -> Result<Self, TinyLmError> {
        Ok(Self {
            prompt: render_prompt(&r.original, &[r.target_type])?,
            chosen: r.chosen.clone(),
            rejected: r.rejected.clone(),
        })
    }
}

/// Which objective [`grad_check`] differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Sft,
    Dpo,
    Ipo,
}

pub enum GradBatch<'a> {
    Sft(&'a [(String, String)]),
    Pref { reference: &'a TinyModel, pairs: &'a [PrefExample], beta: f64 },
}

fn sum_logprob(p: &[f64], l: &Layout, e: &Encoded) -> f64 {
    gru::forward(p, l, &e.tokens, e.first_scored).logprobs().iter().sum()
}

/// Mean token NLL over `batch` and, if asked, its gradient.
fn sft_objective(p: &[f64], l: &Layout, batch: &[&Encoded], want_grad: bool) -> (f64, usize, Vec<f64>) {
    let tokens: usize = batch.iter().map(|e| e.tokens.len() - e.first_scored).sum();
    let mut grad = if want_grad { vec![0.0; l.total] } else { Vec::new() };
    let mut nll = 0.0;
    for e in batch {
        let trace = gru::forward(p, l, &e.tokens, e.first_scored);
        nll -= trace.logprobs().iter().sum::<f64>();
        if want_grad {
            gru::backward(p, l, &trace, -1.0 / tokens as f64, &mut grad);
        }
    }
    (nll / tokens as f64, tokens, grad)
}

struct PrefEncoded {
    chosen: Encoded,
    rejected: Encoded,
    /// Reference log-probabilities of chosen and rejected.
    ref_chosen: f64,
    ref_rejected: f64,
}

fn encode_pairs(model: &TinyModel, reference: &TinyModel, pairs: &[PrefExample]) -> Vec<PrefEncoded> {
    pairs
        .iter()
        .map(|ex| {
            let chosen = model.encode_example(&ex.prompt, &ex.chosen);
            let rejected = model.encode_example(&ex.prompt, &ex.rejected);
            let ref_chosen = sum_logprob(&reference.params, &reference.layout, &chosen);
            let ref_rejected = sum_logprob(&reference.params, &reference.layout, &rejected);
            PrefEncoded { chosen, rejected, ref_chosen, ref_rejected }
        })
        .collect()
}

/// Mean preference loss over `batch`, the per-pair log-ratio gaps and, if asked, the gradient.
fn pref_objective(
    p: &[f64],
    l: &Layout,
    batch: &[&PrefEncoded],
    method: PrefMethod,
    beta: f64,
    want_grad: bool,
) -> (f64, Vec<f64>, Vec<f64>) {
    let b = batch.len() as f64;
    let mut grad = if want_grad { vec![0.0; l.total] } else { Vec::new() };
    let mut loss = 0.0;
    let mut gaps = Vec::with_capacity(batch.len());
    for pe in batch {
        let tc = gru::forward(p, l, &pe.chosen.tokens, pe.chosen.first_scored);
        let tr = gru::forward(p, l, &pe.rejected.tokens, pe.rejected.first_scored);
        let pc: f64 = tc.logprobs().iter().sum();
        let pr: f64 = tr.logprobs().iter().sum();
        let h = (pc - pe.ref_chosen) - (pr - pe.ref_rejected);
        let (li, dh) = method_loss(method, h, beta);
        loss += li / b;
        gaps.push(h);
        if want_grad {
            gru::backward(p, l, &tc, dh / b, &mut grad);
            gru::backward(p, l, &tr, -dh / b, &mut grad);
        }
    }
    (loss, gaps, grad)
}

fn ensure_compatible(model: &TinyModel, reference: &TinyModel) -> Result<(), TinyLmError> {
    if model.layout != reference.layout || model.vocab != reference.vocab {
        return Err(TinyLmError::InvalidConfig("reference model has a different shape or vocabulary".into()));
    }
    Ok(())
}

/// Cross-entropy training on continuation tokens only; the prompt is context.
///
/// Returns the trained model and the mean loss (nats per scored token) of
/// every epoch, accumulated while the epoch runs.
pub fn train_sft(
    model: &TinyModel,
    corpus: &[(String, String)],
    cfg: &TrainConfig,
) -> Result<(TinyModel, Vec<f64>), TinyLmError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(TinyLmError::EmptyCorpus);
    }
    let encoded: Vec<Encoded> = corpus.iter().map(|(p, t)| model.encode_example(p, t)).collect();
    let mut m = model.clone();
    let steps_per_epoch = encoded.len().div_ceil(cfg.batch_size);
    let mut sched = LrSchedule::new(cfg.learning_rate, cfg.scheduler, cfg.epochs * steps_per_epoch, cfg.warmup_ratio);
    let mut opt = AdamW::new(m.layout.decay_mask());
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut t = 0;
    for epoch in 0..cfg.epochs {
        let order = SeededRng::substream(cfg.seed, epoch as u64).permutation(encoded.len());
        let (mut nll, mut count) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Encoded> = chunk.iter().map(|&i| &encoded[i]).collect();
            let (loss, tokens, mut grad) = sft_objective(&m.params, &m.layout, &batch, true);
            nll += loss * tokens as f64;
            count += tokens;
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(&mut m.params, &grad, sched.lr(t), cfg.weight_decay);
            t += 1;
        }
        let mean = nll / count as f64;
        sched.end_epoch(mean);
        curve.push(mean);
    }
    Ok((m, curve))
}

/// Preference training from records, rendering each record's generation prompt.
pub fn train_pref(
    model: &TinyModel,
    reference: &TinyModel,
    pairs: &[PreferenceRecord],
    method: PrefMethod,
    cfg: &TrainConfig,
) -> Result<(TinyModel, Vec<PrefStats>), TinyLmError> {
    let examples = pairs.iter().map(PrefExample::from_record).collect::<Result<Vec<_>, _>>()?;
    train_pref_examples(model, reference, &examples, method, cfg)
}

/// Preference training against a frozen reference.
///
/// Every step scores both continuations under policy and reference, applies
/// the DPO or IPO loss to the log-ratio gap, clips the global gradient norm
/// and advances the schedule. Per-epoch statistics use the gaps seen during
/// the epoch; the plateau schedule monitors the epoch's mean loss.
pub fn train_pref_examples(
    model: &TinyModel,
    reference: &TinyModel,
    pairs: &[PrefExample],
    method: PrefMethod,
    cfg: &TrainConfig,
) -> Result<(TinyModel, Vec<PrefStats>), TinyLmError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(TinyLmError::EmptyPairs);
    }
    ensure_compatible(model, reference)?;
    let encoded = encode_pairs(model, reference, pairs);
    let mut m = model.clone();
    let steps_per_epoch = encoded.len().div_ceil(cfg.batch_size);
    let mut sched = LrSchedule::new(cfg.learning_rate, cfg.scheduler, cfg.epochs * steps_per_epoch, cfg.warmup_ratio);
    let mut opt = AdamW::new(m.layout.decay_mask());
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut t = 0;
    for epoch in 0..cfg.epochs {
        let order = SeededRng::substream(cfg.seed, epoch as u64).permutation(encoded.len());
        let mut gaps = Vec::with_capacity(encoded.len());
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PrefEncoded> = chunk.iter().map(|&i| &encoded[i]).collect();
            let (_, batch_gaps, mut grad) = pref_objective(&m.params, &m.layout, &batch, method, cfg.beta, true);
            gaps.extend(batch_gaps);
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(&mut m.params, &grad, sched.lr(t), cfg.weight_decay);
            t += 1;
        }
        let stats = stats_from_gaps(&gaps, method, cfg.beta)?;
        sched.end_epoch(stats.mean_loss);
        curve.push(stats);
    }
    Ok((m, curve))
}

/// Loss, margin and accuracy of `model` on `pairs` without updating anything.
pub fn pref_stats(
    model: &TinyModel,
    reference: &TinyModel,
    pairs: &[PrefExample],
    method: PrefMethod,
    beta: f64,
) -> Result<PrefStats, TinyLmError> {
    if pairs.is_empty() {
        return Err(TinyLmError::EmptyPairs);
    }
    ensure_compatible(model, reference)?;
    let encoded = encode_pairs(model, reference, pairs);
    let batch: Vec<&PrefEncoded> = encoded.iter().collect();
    let (_, gaps, _) = pref_objective(&model.params, &model.layout, &batch, method, beta, false);
    Ok(stats_from_gaps(&gaps, method, beta)?)
}

/// Per-token scores of both sides of `ex`, in the form the loss kernels consume.
pub fn score_pair(model: &TinyModel, reference: &TinyModel, ex: &PrefExample) -> Result<PrefBatchItem, TinyLmError> {
    ensure_compatible(model, reference)?;
    Ok(PrefBatchItem {
        chosen: model.score_against(reference, &ex.prompt, &ex.chosen)?,
        rejected: model.score_against(reference, &ex.prompt, &ex.rejected)?,
    })
}

type Objective<'a> = Box<dyn Fn(&[f64], bool) -> (f64, Vec<f64>) + 'a>;

fn objective<'a>(model: &'a TinyModel, batch: &GradBatch<'_>, kind: LossKind) -> Result<Objective<'a>, TinyLmError> {
    let l = &model.layout;
    match (batch, kind) {
        (GradBatch::Sft(corpus), LossKind::Sft) => {
            if corpus.is_empty() {
                return Err(TinyLmError::EmptyCorpus);
            }
            let encoded: Vec<Encoded> = corpus.iter().map(|(p, t)| model.encode_example(p, t)).collect();
            Ok(Box::new(move |p, g| {
                let refs: Vec<&Encoded> = encoded.iter().collect();
                let (loss, _, grad) = sft_objective(p, l, &refs, g);
                (loss, grad)
            }))
        }
        (GradBatch::Pref { reference, pairs, beta }, LossKind::Dpo | LossKind::Ipo) => {
            if pairs.is_empty() {
                return Err(TinyLmError::EmptyPairs);
            }
            ensure_compatible(model, reference)?;
            let method = if kind == LossKind::Dpo { PrefMethod::Dpo } else { PrefMethod::Ipo };
            let encoded = encode_pairs(model, reference, pairs);
            let beta = *beta;
            Ok(Box::new(move |p, g| {
                let refs: Vec<&PrefEncoded> = encoded.iter().collect();
                let (loss, _, grad) = pref_objective(p, l, &refs, method, beta, g);
                (loss, grad)
            }))
        }
        _ => Err(TinyLmError::InvalidConfig("loss kind does not match the batch".into())),
    }
}

/// The batch loss the training loops minimize and its gradient, unclipped.
pub fn loss_and_grad(model: &TinyModel, batch: &GradBatch<'_>, kind: LossKind) -> Result<(f64, Vec<f64>), TinyLmError> {
    Ok(objective(model, batch, kind)?(&model.params, true))
}

/// Largest relative error between the analytic gradient and central finite
/// differences on a random 1% of the parameters (at least one).
///
/// The relative error of each coordinate is `|a - n| / max(|a|, |n|, 1e-6)`,
/// so a coordinate where both gradients vanish contributes 0.
pub fn grad_check(
    model: &TinyModel,
    batch: &GradBatch<'_>,
    kind: LossKind,
    eps: f64,
    seed: u64,
) -> Result<f64, TinyLmError> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(TinyLmError::InvalidConfig(format!("eps {eps} outside [1e-7, 1e-3]")));
    }
    let objective = objective(model, batch, kind)?;
    let l = &model.layout;
    let (_, analytic) = objective(&model.params, true);
    let n = l.total;
    let picks = (n / 100).max(1);
    let mut idx = SeededRng::new(seed).permutation(n);
    idx.truncate(picks);
    let mut p = model.params.clone();
    let mut worst: f64 = 0.0;
    for i in idx {
        let orig = p[i];
        p[i] = orig + eps;
        let (up, _) = objective(&p, false);
        p[i] = orig - eps;
        let (down, _) = objective(&p, false);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}

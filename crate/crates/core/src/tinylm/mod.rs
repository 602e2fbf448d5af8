//! A tiny GRU language model with supervised and preference training.
//!
//! Small enough (tens of thousands of parameters, `f64` throughout) that every
//! gradient can be checked against finite differences, yet it runs the same
//! prompt format and preference losses as a full-size model would.

mod gru;
mod optim;
pub mod synthetic;
mod train;
pub mod vocab;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;
use crate::prefloss::{PrefLossError, ScoredSequence};
use crate::rng::SeededRng;

use gru::Layout;
pub use optim::{
    clip_grad_norm, global_norm, AdamW, LrSchedule, Scheduler, PLATEAU_FACTOR, PLATEAU_PATIENCE,
    PLATEAU_THRESHOLD,
};
pub use train::{
    grad_check, loss_and_grad, pref_stats, score_pair, train_pref, train_pref_examples, train_sft, GradBatch, LossKind,
    PrefExample, TrainConfig,
};
pub use vocab::Vocab;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TinyLmError {
    #[error("vocabulary has {0} tokens; at least 4 are required")]
    VocabTooSmall(usize),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no preference pairs")]
    EmptyPairs,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    PrefLoss(#[from] PrefLossError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Longest token sequence (prompt, separator, continuation, markers) fed to the model.
    pub context_len: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { embed_dim: 32, hidden_dim: 64, context_len: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinyModel {
    vocab: Vocab,
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
}

/// Token ids of one scored example: `BOS prompt SEP continuation EOS`.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub tokens: Vec<u32>,
    /// Index of the first continuation token.
    pub first_scored: usize,
}

pub fn init_model(vocab: Vocab, config: ModelConfig, seed: u64) -> Result<TinyModel, TinyLmError> {
    if vocab.len() < 4 {
        return Err(TinyLmError::VocabTooSmall(vocab.len()));
    }
    if config.embed_dim == 0 || config.hidden_dim == 0 || config.context_len < 4 {
        return Err(TinyLmError::InvalidConfig("dimensions must be positive and context_len >= 4".into()));
    }
    let config = ModelConfig { seed, ..config };
    let layout = Layout::new(vocab.len(), config.embed_dim, config.hidden_dim);
    let mut rng = SeededRng::new(seed);
    let mut params = vec![0.0; layout.total];
    let k_in = 1.0 / (config.hidden_dim as f64).sqrt();
    for (name, offset, shape) in layout.tensors() {
        let n: usize = shape.iter().product();
        let slice = &mut params[offset..offset + n];
        if name.starts_with("b_") {
            continue;
        }
        let scale = if name == "embed" { 0.5 } else { k_in };
        for p in slice {
            *p = scale * (2.0 * rng.unit_f64() - 1.0);
        }
    }
    Ok(TinyModel { vocab, config, layout, params })
}

impl TinyModel {
    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Encodes a prompt and continuation, truncating the prompt from the left
    /// (then the continuation from the right) to fit the context.
    pub fn encode_example(&self, prompt: &str, continuation: &str) -> Encoded {
        let mut p = self.vocab.encode(prompt);
        let mut c = self.vocab.encode(continuation);
        let budget = self.config.context_len - 3;
        c.truncate(budget);
        if p.len() + c.len() > budget {
            p.drain(..p.len() + c.len() - budget);
        }
        let mut tokens = Vec::with_capacity(p.len() + c.len() + 3);
        tokens.push(vocab::BOS);
        tokens.extend(p);
        tokens.push(vocab::SEP);
        let first_scored = tokens.len();
        tokens.extend(c);
        tokens.push(vocab::EOS);
        Encoded { tokens, first_scored }
    }

    /// Next-token distributions after every prefix of `tokens`.
    pub fn distributions(&self, tokens: &[u32]) -> Vec<Vec<f64>> {
        let mut h = vec![0.0; self.layout.h];
        tokens
            .iter()
            .map(|&x| {
                let s = gru::step(&self.params, &self.layout, x as usize, &h, true);
                h = s.h;
                s.probs.expect("requested")
            })
            .collect()
    }

    /// Per-token log-probabilities of `continuation` (and the closing EOS) given `prompt`.
    pub fn score(&self, prompt: &str, continuation: &str) -> Vec<f64> {
        let e = self.encode_example(prompt, continuation);
        gru::forward(&self.params, &self.layout, &e.tokens, e.first_scored).logprobs()
    }

    /// Scores a continuation under this model as policy and `reference` as reference.
    pub fn score_against(
        &self,
        reference: &TinyModel,
        prompt: &str,
        continuation: &str,
    ) -> Result<ScoredSequence, TinyLmError> {
        let e = self.encode_example(prompt, continuation);
        let policy = gru::forward(&self.params, &self.layout, &e.tokens, e.first_scored).logprobs();
        let reference = gru::forward(&reference.params, &reference.layout, &e.tokens, e.first_scored).logprobs();
        Ok(ScoredSequence::new(e.tokens[e.first_scored..].to_vec(), policy, reference)?)
    }

    /// Continues `prompt` for at most `max_len` tokens, stopping after EOS.
    ///
    /// Greedy decoding takes the most probable token (lowest id on ties);
    /// otherwise tokens are sampled from a stream seeded by `seed`.
    pub fn generate(&self, prompt: &str, max_len: usize, seed: u64, greedy: bool) -> String {
        self.vocab.decode(&self.generate_ids(prompt, max_len, seed, greedy))
    }

    /// Token ids emitted by [`TinyModel::generate`], including a final EOS if produced.
    pub fn generate_ids(&self, prompt: &str, max_len: usize, seed: u64, greedy: bool) -> Vec<u32> {
        let e = self.encode_example(prompt, "");
        let prefix = &e.tokens[..e.first_scored];
        let mut rng = SeededRng::new(seed);
        let mut h = vec![0.0; self.layout.h];
        for &x in &prefix[..prefix.len() - 1] {
            h = gru::step(&self.params, &self.layout, x as usize, &h, false).h;
        }
        let mut last = vocab::SEP;
        let mut out = Vec::new();
        for _ in 0..max_len {
            let s = gru::step(&self.params, &self.layout, last as usize, &h, true);
            h = s.h;
            let probs = s.probs.expect("requested");
            let next = if greedy {
                probs
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
                    .0 as u32
            } else {
                rng.categorical(&probs) as u32
            };
            out.push(next);
            if next == vocab::EOS {
                break;
            }
            last = next;
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TinyLmError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TinyLmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let tensors = self
            .layout
            .tensors()
            .into_iter()
            .map(|(name, offset, shape)| {
                let n: usize = shape.iter().product();
                NamedTensor { name, shape, data: self.params[offset..offset + n].to_vec() }
            })
            .collect();
        let ck = Checkpoint { format_version: CHECKPOINT_VERSION, config: self.config, vocab: self.vocab.clone(), tensors };
        serde_json::to_string(&ck).expect("checkpoints always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, TinyLmError> {
        let bad = |m: String| TinyLmError::Checkpoint(m);
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported format_version {}", ck.format_version)));
        }
        let layout = Layout::new(ck.vocab.len(), ck.config.embed_dim, ck.config.hidden_dim);
        let mut params = vec![0.0; layout.total];
        let expected = layout.tensors();
        if expected.len() != ck.tensors.len() {
            return Err(bad("tensor count mismatch".into()));
        }
        for ((name, offset, shape), t) in expected.into_iter().zip(ck.tensors) {
            if t.name != name || t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(bad(format!("tensor {:?} does not match the expected {name} {shape:?}", t.name)));
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("tensor {name} has non-finite values")));
            }
            params[offset..offset + t.data.len()].copy_from_slice(&t.data);
        }
        Ok(Self { vocab: ck.vocab, config: ck.config, layout, params })
    }
}

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    config: ModelConfig,
    vocab: Vocab,
    tensors: Vec<NamedTensor>,
}

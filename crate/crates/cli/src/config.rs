//! The TOML run configuration. Every section and key is optional; command
//! line flags override the file and the file overrides built-in defaults.
//!
//! ```toml
//! seed = 7
//!
//! [split]
//! ratio = 0.7
//!
//! [model]
//! embed_dim = 32
//! hidden_dim = 64
//! context_len = 256
//! max_words = 2000
//!
//! [train]
//! learning_rate = 1e-6
//! epochs = 50
//!
//! [gen]
//! max_len = 64
//! greedy = true
//!
//! [eval]
//! bleu_max_n = 4
//!
//! [ptd]
//! threshold = 0.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use apt_align_core::tinylm::Scheduler;

use crate::error::CliError;
use crate::io::read_text;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub gen: GenSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub ptd: PtdSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub context_len: Option<usize>,
    pub max_words: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub beta: Option<f64>,
    pub max_grad_norm: Option<f64>,
    pub scheduler: Option<Scheduler>,
    pub warmup_ratio: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSection {
    pub max_len: Option<usize>,
    pub greedy: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub bleu_max_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtdSection {
    pub threshold: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        toml::from_str(&read_text(path)?).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

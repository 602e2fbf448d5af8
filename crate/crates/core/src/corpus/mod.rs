//! Dataset records, ingestion, splitting and preference-pair construction.
//!
//! Three JSONL schemas are understood (one object per line, UTF-8, LF):
//!
//! * `pairs.jsonl`: `{"id","original","paraphrase","types":[labels],"is_paraphrase":bool}`
//! * `prefs.jsonl`: `{"id","original","target_type","chosen","rejected"}`
//! * `annotations.jsonl`: `{"item_id","model_id","target_type","annotator_id","rank":1..4}`
//!
//! Loaders normalize all sentence text and collect per-line problems into a
//! [`LoadReport`] instead of aborting on the first bad record.

mod load;
mod normalize;
mod prompt;
mod rankings;
mod split;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{ParaphraseType, TypeSet};

pub use load::{
    load_annotations, load_apty_ranked, load_etpc, load_pairs, read_annotations, read_pairs,
    read_prefs, write_jsonl, LoadReport, PairSchema, RecordError, TypeCount, TypeCounts,
};
pub use normalize::{normalize_text, repair_mojibake};
pub use prompt::{prompt_sentence, render_prompt};
pub use rankings::{consensus_ranks, pairs_from_rankings, ConsensusRank, RankedItem};
pub use split::{split_multilabel, split_stratified, train_quota, SplitPair};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input")]
    EmptyInput,
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("no text for model {model_id:?} on item {item_id:?}")]
    MissingText { item_id: String, model_id: String },
}

/// Records that carry a unique identifier.
pub trait Identified {
    fn id(&self) -> &str;
}

/// One sentence pair with the paraphrase types that relate its two sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePairRecord {
    pub id: String,
    pub original: String,
    pub paraphrase: String,
    pub types: TypeSet,
    pub is_paraphrase: bool,
}

/// A preferred and a dispreferred paraphrase of the same sentence under one target type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub id: String,
    pub original: String,
    pub target_type: ParaphraseType,
    pub chosen: String,
    pub rejected: String,
}

/// One human judgment of one model output.
///
/// Rank 1 is best and 4 is worst; invalid paraphrases always carry rank 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub model_id: String,
    pub target_type: ParaphraseType,
    pub annotator_id: String,
    pub rank: u8,
    pub valid: bool,
}

impl Identified for SentencePairRecord {
    fn id(&self) -> &str {
        &self.id
    }
}

impl Identified for PreferenceRecord {
    fn id(&self) -> &str {
        &self.id
    }
}

//! Record types that only the pipeline reads and writes.
//!
//! * `items.jsonl`: `{"item_id","original","target_type"}`, the generation requests.
//! * `generations.jsonl`: `{"item_id","model_id","original","target_type","text"}`.
//! * `references.jsonl`: `{"item_id","reference"}`; an item may have several lines.

use serde::{Deserialize, Serialize};

use apt_align_core::taxonomy::ParaphraseType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub item_id: String,
    pub original: String,
    pub target_type: ParaphraseType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    pub item_id: String,
    pub model_id: String,
    pub original: String,
    pub target_type: ParaphraseType,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub item_id: String,
    pub reference: String,
}

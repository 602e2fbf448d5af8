//! Reference-based overlap metrics: sentence BLEU and ROUGE-1/2/L.
//!
//! Text is lowercased and split into alphanumeric runs, with every other
//! non-space character kept as its own token so that punctuation edits count.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextMetricError {
    #[error("empty input after tokenization")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl OverlapScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_overlap(cand: &HashMap<&[String], usize>, reference: &HashMap<&[String], usize>) -> usize {
    cand.iter()
        .map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Sentence BLEU without smoothing.
///
/// Uses n-gram orders `1..=min(max_n, |candidate|)`, clips each candidate
/// n-gram by its highest count in any single reference, and applies the brevity
/// penalty against the reference length closest to the candidate (shorter wins ties).
pub fn bleu(candidate: &str, references: &[&str], max_n: usize) -> Result<f64, TextMetricError> {
    let cand = tokenize(candidate);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).filter(|r| !r.is_empty()).collect();
    if cand.is_empty() || refs.is_empty() || max_n == 0 {
        return Err(TextMetricError::EmptyInput);
    }
    let orders = max_n.min(cand.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand_counts = ngram_counts(&cand, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in &refs {
            for (g, c) in ngram_counts(r, n) {
                let slot = max_ref.entry(g).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        let matched = clipped_overlap(&cand_counts, &max_ref);
        if matched == 0 {
            return Ok(0.0);
        }
        log_sum += (matched as f64 / (cand.len() + 1 - n) as f64).ln();
    }
    let c = cand.len();
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("at least one reference");
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / orders as f64).exp())
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<OverlapScore, TextMetricError> {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if n == 0 || (cand.len() < n && reference.len() < n) {
        return Err(TextMetricError::EmptyInput);
    }
    let cand_counts = ngram_counts(&cand, n);
    let ref_counts = ngram_counts(&reference, n);
    let overlap = clipped_overlap(&cand_counts, &ref_counts) as f64;
    let ratio = |total: usize| if total == 0 { 0.0 } else { overlap / total as f64 };
    Ok(OverlapScore::new(
        ratio(cand.len().saturating_sub(n - 1)),
        ratio(reference.len().saturating_sub(n - 1)),
    ))
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &str, reference: &str) -> Result<OverlapScore, TextMetricError> {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if cand.is_empty() || reference.is_empty() {
        return Err(TextMetricError::EmptyInput);
    }
    let l = lcs_len(&cand, &reference) as f64;
    Ok(OverlapScore::new(l / cand.len() as f64, l / reference.len() as f64))
}

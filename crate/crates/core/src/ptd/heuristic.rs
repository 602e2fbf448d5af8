//! Deterministic surface rules for four detectable types.

use std::collections::BTreeMap;

use crate::corpus::SentencePairRecord;
use crate::taxonomy::{ParaphraseType, TypeSet};
use crate::textmetrics::tokenize;

/// The types [`heuristic_detect`] can emit.
pub const RULE_TYPES: [ParaphraseType; 4] = [
    ParaphraseType::ADDITION_DELETION,
    ParaphraseType::PUNCTUATION_CHANGES,
    ParaphraseType::CHANGE_OF_ORDER,
    ParaphraseType::SPELLING_CHANGES,
];

fn is_content(token: &str) -> bool {
    token.chars().all(char::is_alphanumeric)
}

fn multiset(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Levenshtein distance over characters.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + usize::from(ca != cb)).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

fn looks_like_respelling(a: &str, b: &str) -> bool {
    let d = edit_distance(a, b);
    if !(1..=2).contains(&d) {
        return false;
    }
    let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if ca.len() < 3 || cb.len() < 3 {
        return false;
    }
    ca[..3] == cb[..3] || ca[ca.len() - 3..] == cb[cb.len() - 3..]
}

/// Token pairs left unmatched by a longest-common-subsequence alignment,
/// paired positionally within each gap.
fn unmatched_pairs<'a>(a: &'a [String], b: &'a [String]) -> Vec<(&'a str, &'a str)> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut gap_a, mut gap_b) = (Vec::new(), Vec::new());
    let mut flush = |ga: &mut Vec<&'a str>, gb: &mut Vec<&'a str>| {
        pairs.extend(ga.iter().copied().zip(gb.iter().copied()));
        ga.clear();
        gb.clear();
    };
    while i < n && j < m {
        if a[i] == b[j] {
            flush(&mut gap_a, &mut gap_b);
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            gap_a.push(a[i].as_str());
            i += 1;
        } else {
            gap_b.push(b[j].as_str());
            j += 1;
        }
    }
    gap_a.extend(a[i..].iter().map(String::as_str));
    gap_b.extend(b[j..].iter().map(String::as_str));
    flush(&mut gap_a, &mut gap_b);
    pairs
}

/// Rule-based detection of addition/deletion, punctuation changes, change of
/// order and spelling changes. Rules are evaluated independently and may fire
/// together:
///
/// * addition/deletion: the number of content tokens differs;
/// * punctuation: content multisets are equal and the punctuation sequences differ;
/// * change of order: content multisets are equal and the content sequences differ;
/// * spelling: exactly one aligned content pair is 1 or 2 edits apart and
///   shares a three-character prefix or suffix.
pub fn heuristic_detect(pair: &SentencePairRecord) -> TypeSet {
    let split = |text: &str| -> (Vec<String>, Vec<String>) { tokenize(text).into_iter().partition(|t| is_content(t)) };
    let (content_a, punct_a) = split(&pair.original);
    let (content_b, punct_b) = split(&pair.paraphrase);

    let mut out = TypeSet::empty();
    let same_bag = multiset(&content_a) == multiset(&content_b);
    if content_a.len() != content_b.len() {
        out.insert(ParaphraseType::ADDITION_DELETION);
    }
    if same_bag && punct_a != punct_b {
        out.insert(ParaphraseType::PUNCTUATION_CHANGES);
    }
    if same_bag && content_a != content_b {
        out.insert(ParaphraseType::CHANGE_OF_ORDER);
    }
    let respellings = unmatched_pairs(&content_a, &content_b)
        .into_iter()
        .filter(|(x, y)| looks_like_respelling(x, y))
        .count();
    if respellings == 1 {
        out.insert(ParaphraseType::SPELLING_CHANGES);
    }
    out
}

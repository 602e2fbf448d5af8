//! Word-level vocabulary with a character fallback.
//!
//! Text splits into alphanumeric runs and single punctuation characters, case
//! preserved. Words outside the vocabulary are spelled as their first character
//! followed by `##`-prefixed continuation characters.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const SEP: u32 = 3;
pub const UNK: u32 = 4;
const SPECIALS: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<sep>", "<unk>"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

pub fn split_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            out.push(&text[s..i]);
        }
        if !c.is_whitespace() {
            out.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

impl Vocab {
    /// Special tokens, then the `max_words` most frequent words (ties by
    /// spelling), then plain and continuation forms of every character seen.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_words: usize) -> Self {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        let mut chars = BTreeSet::new();
        for text in texts {
            for w in split_words(text) {
                *freq.entry(w).or_insert(0) += 1;
                chars.extend(w.chars());
            }
        }
        let mut words: Vec<(&str, usize)> = freq.into_iter().collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut seen: BTreeSet<String> = tokens.iter().cloned().collect();
        let mut push = |t: String| {
            if seen.insert(t.clone()) {
                tokens.push(t);
            }
        };
        for (w, _) in words.into_iter().take(max_words) {
            push(w.to_string());
        }
        for c in chars {
            push(c.to_string());
            push(format!("##{c}"));
        }
        Self::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for w in split_words(text) {
            if let Some(id) = self.id(w) {
                out.push(id);
                continue;
            }
            for (k, c) in w.chars().enumerate() {
                let piece = if k == 0 { c.to_string() } else { format!("##{c}") };
                out.push(self.id(&piece).unwrap_or(UNK));
            }
        }
        out
    }

    /// Inverse of [`Vocab::encode`] up to spacing around punctuation.
    /// Decoding stops at EOS and skips the other control tokens.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        let mut prev: Option<&str> = None;
        for &id in ids {
            match id {
                EOS => break,
                PAD | BOS | SEP => continue,
                _ => {}
            }
            let tok = self.token(id);
            if let Some(rest) = tok.strip_prefix("##").filter(|r| !r.is_empty()) {
                out.push_str(rest);
                prev = Some(tok);
                continue;
            }
            let glue_left = matches!(tok, "." | "," | ";" | ":" | "!" | "?" | ")" | "]");
            let glue_right = matches!(prev, Some("(") | Some("["));
            if prev.is_some() && !glue_left && !glue_right {
                out.push(' ');
            }
            out.push_str(tok);
            prev = Some(tok);
        }
        out
    }
}

//! A preference task that is separable by construction: the chosen
//! continuation reverses the source sentence and the rejected one copies it.

use crate::corpus::PreferenceRecord;
use crate::rng::SeededRng;
use crate::taxonomy::ParaphraseType;

use super::PrefExample;

const WORDS: [&str; 8] = ["amber", "birch", "cedar", "delta", "ember", "fjord", "grove", "heron"];

/// `n` reversal pairs over an eight-word alphabet, sentences of 3 to 6 words.
/// Palindromic sentences are redrawn since their two sides would coincide.
pub fn reversal_pairs(n: usize, seed: u64) -> Vec<PreferenceRecord> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|i| {
            let words = loop {
                let len = 3 + rng.below(4);
                let w: Vec<&str> = (0..len).map(|_| WORDS[rng.below(WORDS.len())]).collect();
                if w.iter().ne(w.iter().rev()) {
                    break w;
                }
            };
            let original = words.join(" ");
            let reversed: Vec<&str> = words.iter().rev().copied().collect();
            PreferenceRecord {
                id: format!("rev-{i:05}"),
                original: original.clone(),
                target_type: ParaphraseType::CHANGE_OF_ORDER,
                chosen: reversed.join(" "),
                rejected: original,
            }
        })
        .collect()
}

/// The same pairs with the bare sentence as prompt, so the chosen side is
/// literally the reversed prompt and the rejected side a copy of it.
pub fn reversal_examples(n: usize, seed: u64) -> Vec<PrefExample> {
    reversal_pairs(n, seed)
        .into_iter()
        .map(|r| PrefExample { prompt: r.original, chosen: r.chosen, rejected: r.rejected })
        .collect()
}

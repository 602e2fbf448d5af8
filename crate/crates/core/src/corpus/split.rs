//! Seeded train/test splits.
//!
//! Both splitters draw one permutation of the input from the seed and then
//! fill each group's train share with the group's earliest members in that
//! permutation. Outputs keep the input order.

use std::collections::BTreeMap;

use crate::rng::SeededRng;
use crate::taxonomy::ParaphraseType;

use super::{CorpusError, SentencePairRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

/// Number of the `n` records of one group that go to train.
///
/// `ratio * n` rounded half up; groups of two or more always keep at least
/// one record on each side.
pub fn train_quota(n: usize, ratio: f64) -> usize {
    if n == 0 {
        return 0;
    }
    // The epsilon keeps products like 0.7 * 5 = 3.4999999999999996 rounding up.
    let rounded = (ratio * n as f64 + 0.5 + 1e-9).floor() as usize;
    if n >= 2 {
        rounded.clamp(1, n - 1)
    } else {
        rounded.min(1)
    }
}

fn check(len: usize, ratio: f64) -> Result<(), CorpusError> {
    if len == 0 {
        return Err(CorpusError::EmptyInput);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    Ok(())
}

/// Position of every record in the seeded permutation.
fn permutation_ranks(n: usize, seed: u64) -> Vec<usize> {
    let order = SeededRng::new(seed).permutation(n);
    let mut rank = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        rank[idx] = pos;
    }
    rank
}

fn collect<T: Clone>(records: &[T], in_train: &[bool], seed: u64) -> SplitPair<T> {
    let (train, test): (Vec<_>, Vec<_>) = records
        .iter()
        .zip(in_train)
        .partition(|(_, &train)| train);
    SplitPair {
        train: train.into_iter().map(|(r, _)| r.clone()).collect(),
        test: test.into_iter().map(|(r, _)| r.clone()).collect(),
        seed,
    }
}

/// Splits so that every group defined by `key` is divided by `ratio`.
pub fn split_stratified<T: Clone, K: Ord>(
    records: &[T],
    ratio: f64,
    key: impl Fn(&T) -> K,
    seed: u64,
) -> Result<SplitPair<T>, CorpusError> {
    check(records.len(), ratio)?;
    let rank = permutation_ranks(records.len(), seed);
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(key(r)).or_default().push(i);
    }
    let mut in_train = vec![false; records.len()];
    for members in groups.values_mut() {
        members.sort_by_key(|&i| rank[i]);
        for &i in &members[..train_quota(members.len(), ratio)] {
            in_train[i] = true;
        }
    }
    Ok(collect(records, &in_train, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Train,
    Test,
}

/// Greedy iterative stratification for multilabel records.
///
/// Types are visited from rarest to most frequent. Each type sends just
/// enough of its still-unassigned records to train to approach `ratio` for
/// that type; a record is assigned once and never revisited. Records without
/// types then fill the global ratio. A final local search moves or swaps
/// records while that reduces the number of types (with two or more
/// records) present on one side only.
pub fn split_multilabel(
    records: &[SentencePairRecord],
    ratio: f64,
    seed: u64,
) -> Result<SplitPair<SentencePairRecord>, CorpusError> {
    check(records.len(), ratio)?;
    let rank = permutation_ranks(records.len(), seed);

    let mut members: BTreeMap<ParaphraseType, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        for t in r.types.iter() {
            members.entry(t).or_default().push(i);
        }
    }
    for list in members.values_mut() {
        list.sort_by_key(|&i| rank[i]);
    }
    let mut order: Vec<ParaphraseType> = members.keys().copied().collect();
    order.sort_by_key(|t| (members[t].len(), *t));

    let mut side: Vec<Option<Side>> = vec![None; records.len()];
    for t in &order {
        let list = &members[t];
        let n = list.len();
        let count = |s: Side| list.iter().filter(|&&i| side[i] == Some(s)).count();
        let (train, test) = (count(Side::Train), count(Side::Test));
        let free: Vec<usize> = list.iter().copied().filter(|&i| side[i].is_none()).collect();

        let mut to_train = train_quota(n, ratio).saturating_sub(train).min(free.len());
        if n >= 2 && !free.is_empty() {
            if train + to_train == 0 {
                to_train = 1;
            }
            if test + (free.len() - to_train) == 0 {
                to_train -= 1;
            }
        }
        for (k, &i) in free.iter().enumerate() {
            side[i] = Some(if k < to_train { Side::Train } else { Side::Test });
        }
    }

    let mut untyped: Vec<usize> = (0..records.len()).filter(|&i| side[i].is_none()).collect();
    untyped.sort_by_key(|&i| rank[i]);
    let assigned_train = side.iter().filter(|s| **s == Some(Side::Train)).count();
    let wanted = (ratio * records.len() as f64 + 0.5 + 1e-9).floor() as usize;
    let to_train = wanted.saturating_sub(assigned_train).min(untyped.len());
    for (k, &i) in untyped.iter().enumerate() {
        side[i] = Some(if k < to_train { Side::Train } else { Side::Test });
    }

    let mut side: Vec<Side> = side.into_iter().map(|s| s.expect("all assigned")).collect();
    repair_presence(records, &members, &order, &mut side);

    let in_train: Vec<bool> = side.iter().map(|s| *s == Side::Train).collect();
    Ok(collect(records, &in_train, seed))
}

fn repair_presence(
    records: &[SentencePairRecord],
    members: &BTreeMap<ParaphraseType, Vec<usize>>,
    order: &[ParaphraseType],
    side: &mut [Side],
) {
    let missing_side = |side: &[Side], t: ParaphraseType| -> Option<Side> {
        let list = &members[&t];
        if list.len() < 2 {
            return None;
        }
        let train = list.iter().filter(|&&i| side[i] == Side::Train).count();
        match train {
            0 => Some(Side::Train),
            n if n == list.len() => Some(Side::Test),
            _ => None,
        }
    };
    let stranded = |side: &[Side]| order.iter().filter(|&&t| missing_side(side, t).is_some()).count();
    let flip = |s: Side| if s == Side::Train { Side::Test } else { Side::Train };

    // Each accepted change strictly lowers the stranded count.
    loop {
        let current = stranded(side);
        if current == 0 {
            return;
        }
        let mut improved = false;
        'types: for &t in order {
            let Some(missing) = missing_side(side, t) else { continue };
            let from = flip(missing);
            for &i in &members[&t] {
                side[i] = missing;
                if stranded(side) < current {
                    improved = true;
                    break 'types;
                }
                // Compensate by sending back a record that shares another type with i.
                for u in records[i].types.iter().filter(|&u| u != t) {
                    for &j in &members[&u] {
                        if side[j] != missing || records[j].types.contains(t) {
                            continue;
                        }
                        side[j] = from;
                        if stranded(side) < current {
                            improved = true;
                            break 'types;
                        }
                        side[j] = missing;
                    }
                }
                side[i] = from;
            }
        }
        if !improved {
            return;
        }
    }
}

/// Types that have at least two records but are missing from one side.
#[cfg(test)]
pub(crate) fn stranded_types(split: &SplitPair<SentencePairRecord>) -> crate::taxonomy::TypeSet {
    use crate::taxonomy::TypeSet;
    let union = |rs: &[SentencePairRecord]| rs.iter().fold(TypeSet::empty(), |acc, r| acc.union(&r.types));
    let (train, test) = (union(&split.train), union(&split.test));
    let mut counts: BTreeMap<ParaphraseType, usize> = BTreeMap::new();
    for r in split.train.iter().chain(&split.test) {
        for t in r.types.iter() {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(t, n)| n >= 2 && !(train.contains(t) && test.contains(t)))
        .map(|(t, _)| t)
        .collect()
}

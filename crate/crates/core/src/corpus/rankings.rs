//! Human rankings to chosen/rejected preference pairs.

use std::collections::BTreeMap;

use crate::taxonomy::ParaphraseType;

use super::{normalize_text, AnnotationRecord, CorpusError, PreferenceRecord};

/// One ranked item: a source sentence, the requested type and every model's output.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub original: String,
    pub target_type: ParaphraseType,
    /// Output text per model id.
    pub texts: BTreeMap<String, String>,
}

/// Consensus over annotators for one (item, model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusRank {
    /// Mean of the annotators' ranks.
    pub mean: f64,
    /// Dense re-rank of `mean` within the item (1 = best; ties share a rank).
    pub rank: u32,
    pub annotators: usize,
}

/// Mean rank per (item, model), re-ranked densely within each item.
pub fn consensus_ranks(
    annotations: &[AnnotationRecord],
) -> BTreeMap<String, BTreeMap<String, ConsensusRank>> {
    let mut sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for a in annotations {
        let slot = sums
            .entry(a.item_id.clone())
            .or_default()
            .entry(a.model_id.clone())
            .or_insert((0.0, 0));
        slot.0 += f64::from(a.rank);
        slot.1 += 1;
    }
    sums.into_iter()
        .map(|(item, models)| {
            let means: BTreeMap<String, (f64, usize)> = models
                .into_iter()
                .map(|(m, (sum, n))| (m, (sum / n as f64, n)))
                .collect();
            let mut distinct: Vec<f64> = means.values().map(|(mean, _)| *mean).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let ranked = means
                .into_iter()
                .map(|(m, (mean, n))| {
                    let rank = distinct.iter().position(|&d| d == mean).unwrap() as u32 + 1;
                    (m, ConsensusRank { mean, rank, annotators: n })
                })
                .collect();
            (item, ranked)
        })
        .collect()
}

/// Emits one preference pair for every ordered pair of models where the
/// first ranks strictly better than the second on the same item.
///
/// Equal consensus ranks yield no pair, and pairs whose texts are identical
/// after normalization are skipped. Pair ids are `item:winner>loser`.
pub fn pairs_from_rankings(
    annotations: &[AnnotationRecord],
    items: &BTreeMap<String, RankedItem>,
) -> Result<Vec<PreferenceRecord>, CorpusError> {
    let consensus = consensus_ranks(annotations);
    let mut out = Vec::new();
    for (item_id, ranks) in &consensus {
        let missing = |model_id: &str| CorpusError::MissingText {
            item_id: item_id.clone(),
            model_id: model_id.to_string(),
        };
        let Some(item) = items.get(item_id) else {
            let first = ranks.keys().next().map(String::as_str).unwrap_or_default();
            return Err(missing(first));
        };
        let mut ordered: Vec<(&String, f64, String)> = Vec::with_capacity(ranks.len());
        for (model_id, c) in ranks {
            let text = item.texts.get(model_id).ok_or_else(|| missing(model_id))?;
            ordered.push((model_id, c.mean, normalize_text(text)));
        }
        ordered.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

        for (i, (winner, win_rank, chosen)) in ordered.iter().enumerate() {
            for (loser, lose_rank, rejected) in &ordered[i + 1..] {
                if win_rank >= lose_rank || chosen == rejected {
                    continue;
                }
                out.push(PreferenceRecord {
                    id: format!("{item_id}:{winner}>{loser}"),
                    original: normalize_text(&item.original),
                    target_type: item.target_type,
                    chosen: chosen.clone(),
                    rejected: rejected.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(item: &str, model: &str, annotator: &str, rank: u8) -> AnnotationRecord {
        AnnotationRecord {
            item_id: item.into(),
            model_id: model.into(),
            target_type: ParaphraseType::ADDITION_DELETION,
            annotator_id: annotator.into(),
            rank,
            valid: rank < 4,
        }
    }

    fn item(models: &[&str]) -> BTreeMap<String, RankedItem> {
        let texts = models
            .iter()
            .map(|m| (m.to_string(), format!("output of {m}")))
            .collect();
        BTreeMap::from([(
            "i".to_string(),
            RankedItem {
                original: "The cat sat.".into(),
                target_type: ParaphraseType::ADDITION_DELETION,
                texts,
            },
        )])
    }

    fn pair_names(prefs: &[PreferenceRecord]) -> Vec<String> {
        prefs.iter().map(|p| p.id.trim_start_matches("i:").to_string()).collect()
    }

    #[test]
    fn strict_inequalities_only() {
        let anns = [ann("i", "A", "x", 1), ann("i", "B", "x", 2), ann("i", "C", "x", 4), ann("i", "D", "x", 4)];
        let prefs = pairs_from_rankings(&anns, &item(&["A", "B", "C", "D"])).unwrap();
        assert_eq!(pair_names(&prefs), ["A>B", "A>C", "A>D", "B>C", "B>D"]);
        assert_eq!(prefs[0].chosen, "output of A");
        assert_eq!(prefs[0].rejected, "output of B");
    }

    #[test]
    fn all_wrong_yields_nothing() {
        let anns: Vec<_> = ["A", "B", "C", "D"].iter().map(|m| ann("i", m, "x", 4)).collect();
        assert!(pairs_from_rankings(&anns, &item(&["A", "B", "C", "D"])).unwrap().is_empty());
    }

    #[test]
    fn two_models_one_pair() {
        let anns = [ann("i", "A", "x", 1), ann("i", "B", "x", 3)];
        let prefs = pairs_from_rankings(&anns, &item(&["A", "B"])).unwrap();
        assert_eq!(pair_names(&prefs), ["A>B"]);
    }

    #[test]
    fn identical_texts_are_skipped() {
        let anns = [ann("i", "A", "x", 1), ann("i", "B", "x", 2)];
        let mut items = item(&["A", "B"]);
        let texts = &mut items.get_mut("i").unwrap().texts;
        texts.insert("A".into(), "same  text".into());
        texts.insert("B".into(), " same text".into());
        assert!(pairs_from_rankings(&anns, &items).unwrap().is_empty());
    }

    #[test]
    fn missing_text_is_an_error() {
        let anns = [ann("i", "A", "x", 1), ann("i", "Z", "x", 2)];
        let err = pairs_from_rankings(&anns, &item(&["A"])).unwrap_err();
        assert!(matches!(err, CorpusError::MissingText { ref model_id, .. } if model_id == "Z"));
    }

    #[test]
    fn annotators_are_averaged_then_reranked() {
        let anns = [
            ann("i", "A", "x", 1),
            ann("i", "A", "y", 2),
            ann("i", "B", "x", 2),
            ann("i", "B", "y", 1),
            ann("i", "C", "x", 3),
            ann("i", "C", "y", 4),
        ];
        let c = consensus_ranks(&anns);
        let ranks: Vec<(f64, u32)> = c["i"].values().map(|r| (r.mean, r.rank)).collect();
        assert_eq!(ranks, vec![(1.5, 1), (1.5, 1), (3.5, 2)]);
        let prefs = pairs_from_rankings(&anns, &item(&["A", "B", "C"])).unwrap();
        assert_eq!(pair_names(&prefs), ["A>C", "B>C"]);
    }

    proptest! {
        #[test]
        fn pair_count_matches_enumeration(ranks in proptest::collection::vec(1u8..=4, 1..6)) {
            let models: Vec<String> = (0..ranks.len()).map(|i| format!("m{i}")).collect();
            let anns: Vec<_> = models.iter().zip(&ranks).map(|(m, &r)| ann("i", m, "x", r)).collect();
            let names: Vec<&str> = models.iter().map(String::as_str).collect();
            let prefs = pairs_from_rankings(&anns, &item(&names)).unwrap();
            let mut brute = 0;
            for a in &ranks {
                for b in &ranks {
                    if a < b {
                        brute += 1;
                    }
                }
            }
            prop_assert_eq!(prefs.len(), brute);
        }
    }
}

//! Human-judged accuracy, ranking distributions, significance tests,
//! annotator agreement and automatic-metric correlations for a set of
//! generations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use apt_align_core::corpus::AnnotationRecord;
use apt_align_core::evalstats::{
    anova_oneway, chi_square, cohens_kappa, krippendorff_alpha, logistic_rank_transform, pearson, spearman,
    AlphaLevel, Anova, ChiSquare, ContingencyTable,
};
use apt_align_core::taxonomy::ParaphraseType;
use apt_align_core::textmetrics::{bleu, rouge_l, rouge_n, tokenize, OverlapScore};

use crate::error::CliError;
use crate::schema::{Generation, Reference};

pub const METRIC_NAMES: [&str; 4] = ["BLEU", "ROUGE-1", "ROUGE-2", "ROUGE-L"];
pub const HUMAN: &str = "Human";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelAccuracy {
    pub model: String,
    pub items: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeAccuracy {
    pub model: String,
    pub target_type: ParaphraseType,
    pub items: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// How often each model received rank 1..4, over all annotator judgments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDistribution {
    pub model: String,
    pub counts: [u64; 4],
    pub percentages: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationScores {
    pub item_id: String,
    pub model_id: String,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub mean_rank: f64,
    /// Logistic transform of `mean_rank`.
    pub human: f64,
}

impl GenerationScores {
    fn variables(&self) -> [f64; 5] {
        [self.bleu, self.rouge1, self.rouge2, self.rouge_l, self.human]
    }
}

/// Symmetric matrix over [`METRIC_NAMES`] and [`HUMAN`]; `None` where a
/// variable is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub models: Vec<String>,
    pub annotators: Vec<String>,
    pub accuracy: Vec<ModelAccuracy>,
    pub accuracy_by_type: Vec<TypeAccuracy>,
    pub rank_distribution: Vec<RankDistribution>,
    /// Over the model × rank count table after dropping empty rows and columns.
    pub chi_square: Option<ChiSquare>,
    /// Per-item correctness (0/1) grouped by model.
    pub anova: Option<Anova>,
    /// Mean Cohen's kappa over annotator pairs, on shared judgments.
    pub cohen_kappa: Option<f64>,
    /// Ordinal Krippendorff's alpha over all annotators.
    pub krippendorff_alpha: Option<f64>,
    pub scores: Vec<GenerationScores>,
    pub pearson: Option<CorrelationMatrix>,
    pub spearman: Option<CorrelationMatrix>,
}

type Key = (String, String);

/// Annotations per (item, model), checked against the generations.
fn group_annotations<'a>(
    gens: &[Generation],
    anns: &'a [AnnotationRecord],
) -> Result<BTreeMap<Key, Vec<&'a AnnotationRecord>>, CliError> {
    let known: BTreeMap<Key, ParaphraseType> = gens
        .iter()
        .map(|g| ((g.item_id.clone(), g.model_id.clone()), g.target_type))
        .collect();
    let mut by_key: BTreeMap<Key, Vec<&AnnotationRecord>> = BTreeMap::new();
    for a in anns {
        let key = (a.item_id.clone(), a.model_id.clone());
        match known.get(&key) {
            None => {
                return Err(CliError::Schema(format!(
                    "annotation for item {:?}, model {:?} has no generation",
                    a.item_id, a.model_id
                )))
            }
            Some(&t) if t != a.target_type => {
                return Err(CliError::Schema(format!(
                    "annotation for item {:?} names type {:?}, generation has {:?}",
                    a.item_id,
                    a.target_type.label(),
                    t.label()
                )))
            }
            Some(_) => by_key.entry(key).or_default().push(a),
        }
    }
    if let Some((item, model)) = known.keys().find(|k| !by_key.contains_key(*k)) {
        return Err(CliError::MissingData(format!("no annotations for item {item:?}, model {model:?}")));
    }
    Ok(by_key)
}

/// A generation is correct when a strict majority of its annotators judged it valid.
pub fn majority_valid(anns: &[&AnnotationRecord]) -> bool {
    2 * anns.iter().filter(|a| a.valid).count() > anns.len()
}

fn ratio(correct: usize, items: usize) -> f64 {
    correct as f64 / items as f64
}

fn agreement(by_key: &BTreeMap<Key, Vec<&AnnotationRecord>>) -> (Vec<String>, Option<f64>, Option<f64>) {
    let annotators: Vec<String> = by_key
        .values()
        .flatten()
        .map(|a| a.annotator_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if annotators.len() < 2 {
        return (annotators, None, None);
    }
    let col: BTreeMap<&str, usize> = annotators.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    // coder × unit matrix of ranks
    let mut matrix: Vec<Vec<Option<u8>>> = vec![vec![None; by_key.len()]; annotators.len()];
    for (u, anns) in by_key.values().enumerate() {
        for a in anns {
            matrix[col[a.annotator_id.as_str()]][u] = Some(a.rank);
        }
    }
    let mut kappas = Vec::new();
    for i in 0..annotators.len() {
        for j in i + 1..annotators.len() {
            let (a, b): (Vec<u8>, Vec<u8>) = matrix[i]
                .iter()
                .zip(&matrix[j])
                .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
                .unzip();
            if let Ok(k) = cohens_kappa(&a, &b) {
                kappas.push(k);
            }
        }
    }
    let kappa = (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64);
    let alpha = krippendorff_alpha(&matrix, AlphaLevel::Ordinal).ok();
    (annotators, kappa, alpha)
}

fn best_overlap(scores: impl Iterator<Item = OverlapScore>) -> f64 {
    scores.map(|s| s.f1).fold(0.0, f64::max)
}

/// BLEU and ROUGE F-scores of `text` against the item's references. ROUGE
/// takes the best reference; an empty candidate scores 0 everywhere.
fn metric_scores(text: &str, refs: &[&str], max_n: usize) -> Result<[f64; 4], CliError> {
    if tokenize(text).is_empty() {
        return Ok([0.0; 4]);
    }
    let err = |e: apt_align_core::textmetrics::TextMetricError| CliError::Schema(e.to_string());
    let b = bleu(text, refs, max_n).map_err(err)?;
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut rl = Vec::new();
    for r in refs {
        r1.push(rouge_n(text, r, 1).map_err(err)?);
        r2.push(rouge_n(text, r, 2).map_err(err)?);
        rl.push(rouge_l(text, r).map_err(err)?);
    }
    Ok([
        b,
        best_overlap(r1.into_iter()),
        best_overlap(r2.into_iter()),
        best_overlap(rl.into_iter()),
    ])
}

fn correlation_matrix(
    scores: &[GenerationScores],
    f: impl Fn(&[f64], &[f64]) -> Result<f64, apt_align_core::evalstats::EvalError>,
) -> CorrelationMatrix {
    let columns: Vec<Vec<f64>> = (0..5).map(|v| scores.iter().map(|s| s.variables()[v]).collect()).collect();
    let mut values = vec![vec![None; 5]; 5];
    for i in 0..5 {
        for j in i..5 {
            let r = f(&columns[i], &columns[j]).ok();
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    let variables = METRIC_NAMES.iter().chain([&HUMAN]).map(|s| s.to_string()).collect();
    CorrelationMatrix { variables, values }
}

pub fn evaluate(
    gens: &[Generation],
    anns: &[AnnotationRecord],
    refs: Option<&[Reference]>,
    bleu_max_n: usize,
) -> Result<EvalReport, CliError> {
    if gens.is_empty() {
        return Err(CliError::MissingData("no generations".into()));
    }
    let by_key = group_annotations(gens, anns)?;
    let models: Vec<String> = gens.iter().map(|g| g.model_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let types: BTreeMap<&str, ParaphraseType> = gens.iter().map(|g| (g.item_id.as_str(), g.target_type)).collect();

    let mut accuracy = Vec::new();
    let mut accuracy_by_type = Vec::new();
    let mut rank_distribution = Vec::new();
    let mut groups = Vec::new();
    for m in &models {
        let flags: Vec<(ParaphraseType, bool)> = by_key
            .iter()
            .filter(|((_, model), _)| model == m)
            .map(|((item, _), a)| (types[item.as_str()], majority_valid(a)))
            .collect();
        let correct = flags.iter().filter(|f| f.1).count();
        accuracy.push(ModelAccuracy { model: m.clone(), items: flags.len(), correct, accuracy: ratio(correct, flags.len()) });
        let mut per_type: BTreeMap<ParaphraseType, (usize, usize)> = BTreeMap::new();
        for &(t, ok) in &flags {
            let e = per_type.entry(t).or_default();
            e.0 += 1;
            e.1 += usize::from(ok);
        }
        for (t, (items, correct)) in per_type {
            accuracy_by_type.push(TypeAccuracy {
                model: m.clone(),
                target_type: t,
                items,
                correct,
                accuracy: ratio(correct, items),
            });
        }
        groups.push(flags.iter().map(|f| f64::from(u8::from(f.1))).collect::<Vec<f64>>());

        let mut counts = [0u64; 4];
        for a in by_key.iter().filter(|((_, model), _)| model == m).flat_map(|(_, a)| a) {
            counts[usize::from(a.rank - 1)] += 1;
        }
        let total = counts.iter().sum::<u64>() as f64;
        let percentages = counts.map(|c| 100.0 * c as f64 / total);
        rank_distribution.push(RankDistribution { model: m.clone(), counts, percentages });
    }

    let table = ContingencyTable::new(rank_distribution.iter().map(|r| r.counts.to_vec()).collect());
    let chi = chi_square(&table.without_empty()).ok();
    let anova = anova_oneway(&groups).ok();
    let (annotators, cohen_kappa, krippendorff_alpha) = agreement(&by_key);

    let mut scores = Vec::new();
    let (mut pearson_m, mut spearman_m) = (None, None);
    if let Some(refs) = refs {
        let mut per_item: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in refs {
            per_item.entry(&r.item_id).or_default().push(&r.reference);
        }
        let mut sorted: Vec<&Generation> = gens.iter().collect();
        sorted.sort_by(|a, b| (&a.item_id, &a.model_id).cmp(&(&b.item_id, &b.model_id)));
        for g in sorted {
            let item_refs = per_item
                .get(g.item_id.as_str())
                .ok_or_else(|| CliError::MissingData(format!("no reference for item {:?}", g.item_id)))?;
            let [b, r1, r2, rl] = metric_scores(&g.text, item_refs, bleu_max_n)?;
            let anns = &by_key[&(g.item_id.clone(), g.model_id.clone())];
            let mean_rank = anns.iter().map(|a| f64::from(a.rank)).sum::<f64>() / anns.len() as f64;
            scores.push(GenerationScores {
                item_id: g.item_id.clone(),
                model_id: g.model_id.clone(),
                bleu: b,
                rouge1: r1,
                rouge2: r2,
                rouge_l: rl,
                mean_rank,
                human: logistic_rank_transform(mean_rank),
            });
        }
        pearson_m = Some(correlation_matrix(&scores, pearson));
        spearman_m = Some(correlation_matrix(&scores, spearman));
    }

    Ok(EvalReport {
        models,
        annotators,
        accuracy,
        accuracy_by_type,
        rank_distribution,
        chi_square: chi,
        anova,
        cohen_kappa,
        krippendorff_alpha,
        scores,
        pearson: pearson_m,
        spearman: spearman_m,
    })
}

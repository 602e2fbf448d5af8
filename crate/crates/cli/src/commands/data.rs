use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use apt_align_core::corpus::{
    load_annotations, load_apty_ranked, load_pairs, pairs_from_rankings, split_multilabel, split_stratified,
    Identified, LoadReport, PairSchema, RankedItem, SentencePairRecord, TypeCounts,
};
use apt_align_core::taxonomy::{ParaphraseType, TypeSet};
use apt_align_core::tinylm::synthetic::reversal_pairs;

use crate::args::{IngestArgs, IngestFormat, PairsArgs, SplitArgs, SplitKind};
use crate::config::{pick, RunConfig};
use crate::error::CliError;
use crate::io::{markdown_table, path_string, read_jsonl, write_csv, write_json, write_jsonl};
use crate::schema::Generation;
use crate::write_run_record;

/// Type-frequency rows (types with at least one occurrence), taxonomy order.
pub fn type_count_rows(counts: &TypeCounts) -> Vec<Vec<String>> {
    counts
        .iter()
        .filter(|(_, c)| c.total > 0)
        .map(|(t, c)| vec![t.label().to_string(), c.total.to_string(), c.unique.to_string()])
        .collect()
}

pub const TYPE_COUNT_HEADER: [&str; 3] = ["Type", "Total", "Unique"];

fn write_ingested<T: Serialize>(
    out: &Path,
    name: &str,
    report: &LoadReport<T>,
) -> Result<(), CliError> {
    write_jsonl(&out.join(name), &report.records)?;
    write_csv(&out.join("type_counts.csv"), &TYPE_COUNT_HEADER, &type_count_rows(&report.type_counts))?;
    let rejects: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|e| vec![e.line().to_string(), e.to_string()])
        .collect();
    write_csv(&out.join("rejects.csv"), &["Line", "Error"], &rejects)
}

fn summarize<T>(report: &LoadReport<T>, input: &Path, strict: bool) -> Result<(), CliError> {
    let header: Vec<String> = TYPE_COUNT_HEADER.iter().map(|s| s.to_string()).collect();
    print!("{}", markdown_table(&header, &type_count_rows(&report.type_counts)));
    println!("{} records, {} rejected", report.records.len(), report.errors.len());
    if report.records.is_empty() && !report.errors.is_empty() {
        return Err(CliError::rejects(input, &report.errors));
    }
    if report.records.is_empty() {
        return Err(CliError::MissingData(format!("{}: no records", input.display())));
    }
    if strict && !report.errors.is_empty() {
        return Err(CliError::rejects(input, &report.errors));
    }
    Ok(())
}

pub fn ingest(a: &IngestArgs, out: &Path, seed: u64) -> Result<(), CliError> {
    let format = match a.format {
        IngestFormat::Etpc => "etpc",
        IngestFormat::Qqp => "qqp",
        IngestFormat::Prefs => "prefs",
        IngestFormat::Annotations => "annotations",
    };
    write_run_record(
        out,
        "ingest",
        seed,
        BTreeMap::from([("input", path_string(&a.input))]),
        BTreeMap::from([("format", format.to_string()), ("strict", a.strict.to_string())]),
    )?;
    match a.format {
        IngestFormat::Etpc | IngestFormat::Qqp => {
            let schema = if a.format == IngestFormat::Etpc { PairSchema::Typed } else { PairSchema::Binary };
            let r = load_pairs(&a.input, schema)?;
            write_ingested(out, "pairs.jsonl", &r)?;
            summarize(&r, &a.input, a.strict)
        }
        IngestFormat::Prefs => {
            let r = load_apty_ranked(&a.input)?;
            write_ingested(out, "prefs.jsonl", &r)?;
            summarize(&r, &a.input, a.strict)
        }
        IngestFormat::Annotations => {
            let r = load_annotations(&a.input)?;
            write_ingested(out, "annotations.jsonl", &r)?;
            summarize(&r, &a.input, a.strict)
        }
    }
}

/// Loads a toolkit-normalized file, refusing any rejected line.
pub(crate) fn strict<T>(report: LoadReport<T>, path: &Path) -> Result<Vec<T>, CliError> {
    if !report.errors.is_empty() {
        return Err(CliError::rejects(path, &report.errors));
    }
    Ok(report.records)
}

#[derive(Serialize)]
struct TypeSplitCount {
    #[serde(rename = "type")]
    type_: ParaphraseType,
    train: usize,
    test: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    seed: u64,
    ratio: f64,
    train: usize,
    test: usize,
    types: Vec<TypeSplitCount>,
    train_ids: Vec<&'a str>,
    test_ids: Vec<&'a str>,
}

fn manifest<'a, T: Identified>(
    kind: &'a str,
    seed: u64,
    ratio: f64,
    train: &'a [T],
    test: &'a [T],
    types_of: impl Fn(&T) -> TypeSet,
) -> Manifest<'a> {
    let mut counts: BTreeMap<ParaphraseType, (usize, usize)> = BTreeMap::new();
    for r in train {
        for t in types_of(r).iter() {
            counts.entry(t).or_default().0 += 1;
        }
    }
    for r in test {
        for t in types_of(r).iter() {
            counts.entry(t).or_default().1 += 1;
        }
    }
    Manifest {
        kind,
        seed,
        ratio,
        train: train.len(),
        test: test.len(),
        types: counts.into_iter().map(|(type_, (train, test))| TypeSplitCount { type_, train, test }).collect(),
        train_ids: train.iter().map(Identified::id).collect(),
        test_ids: test.iter().map(Identified::id).collect(),
    }
}

/// Restricts every pair's types to the ten detection classes and drops
/// pairs left without one.
pub fn filter_top10(records: Vec<SentencePairRecord>) -> Vec<SentencePairRecord> {
    let keep = TypeSet::top10();
    records
        .into_iter()
        .filter_map(|mut r| {
            r.types = r.types.iter().filter(|&t| keep.contains(t)).collect();
            (!r.types.is_empty()).then_some(r)
        })
        .collect()
}

pub fn split(a: &SplitArgs, cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let default_ratio = match a.kind {
        SplitKind::Pairs => 0.7,
        SplitKind::Prefs => 0.8,
    };
    let ratio = pick(a.ratio, cfg.split.ratio, default_ratio);
    let kind = match a.kind {
        SplitKind::Pairs => "pairs",
        SplitKind::Prefs => "prefs",
    };
    write_run_record(
        out,
        "split",
        seed,
        BTreeMap::from([("input", path_string(&a.input))]),
        serde_json::json!({ "kind": kind, "ratio": ratio, "top10": a.top10 }),
    )?;
    match a.kind {
        SplitKind::Pairs => {
            let mut records = strict(load_pairs(&a.input, PairSchema::Binary)?, &a.input)?;
            if a.top10 {
                records = filter_top10(records);
            }
            let s = split_multilabel(&records, ratio, seed)?;
            write_jsonl(&out.join("train.jsonl"), &s.train)?;
            write_jsonl(&out.join("test.jsonl"), &s.test)?;
            write_json(&out.join("manifest.json"), &manifest(kind, seed, ratio, &s.train, &s.test, |r| r.types))
        }
        SplitKind::Prefs => {
            let records = strict(load_apty_ranked(&a.input)?, &a.input)?;
            let s = split_stratified(&records, ratio, |r| r.target_type, seed)?;
            write_jsonl(&out.join("train.jsonl"), &s.train)?;
            write_jsonl(&out.join("test.jsonl"), &s.test)?;
            let m = manifest(kind, seed, ratio, &s.train, &s.test, |r| TypeSet::from(r.target_type));
            write_json(&out.join("manifest.json"), &m)
        }
    }
}

/// Loads generations, checking that each (item, model) appears once and
/// that an item's source sentence and target type agree across models.
pub fn load_generations(path: &Path) -> Result<Vec<Generation>, CliError> {
    let gens: Vec<Generation> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    let mut items: BTreeMap<&str, (&str, ParaphraseType)> = BTreeMap::new();
    for g in &gens {
        if !seen.insert((g.item_id.as_str(), g.model_id.as_str())) {
            return Err(CliError::Schema(format!(
                "{}: duplicate generation for item {:?}, model {:?}",
                path.display(),
                g.item_id,
                g.model_id
            )));
        }
        let prev = items.entry(&g.item_id).or_insert((&g.original, g.target_type));
        if *prev != (g.original.as_str(), g.target_type) {
            return Err(CliError::Schema(format!(
                "{}: item {:?} has conflicting original or target type",
                path.display(),
                g.item_id
            )));
        }
    }
    Ok(gens)
}

pub fn ranked_items(gens: &[Generation]) -> BTreeMap<String, RankedItem> {
    let mut items: BTreeMap<String, RankedItem> = BTreeMap::new();
    for g in gens {
        items
            .entry(g.item_id.clone())
            .or_insert_with(|| RankedItem {
                original: g.original.clone(),
                target_type: g.target_type,
                texts: BTreeMap::new(),
            })
            .texts
            .insert(g.model_id.clone(), g.text.clone());
    }
    items
}

pub fn pairs(a: &PairsArgs, out: &Path, seed: u64) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    let prefs = if let Some(n) = a.synthetic_reversal {
        inputs.insert("synthetic_reversal", n.to_string());
        reversal_pairs(n, seed)
    } else {
        let (ann_path, gen_path) = match (&a.annotations, &a.generations) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(CliError::MissingData("need --annotations and --generations".into())),
        };
        inputs.insert("annotations", path_string(ann_path));
        inputs.insert("generations", path_string(gen_path));
        let annotations = strict(load_annotations(ann_path)?, ann_path)?;
        let items = ranked_items(&load_generations(gen_path)?);
        pairs_from_rankings(&annotations, &items)?
    };
    write_run_record(out, "pairs", seed, inputs, serde_json::json!({}))?;
    write_jsonl(&out.join("prefs.jsonl"), &prefs)?;
    println!("{} preference pairs", prefs.len());
    Ok(())
}

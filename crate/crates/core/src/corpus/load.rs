use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{parse_type, ParaphraseType};

use super::{normalize_text, AnnotationRecord, CorpusError, PreferenceRecord, SentencePairRecord};

/// A problem with one input line. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: unknown paraphrase type {label:?}")]
    UnknownType { line: usize, label: String },
}

impl RecordError {
    pub fn line(&self) -> usize {
        match self {
            RecordError::Schema { line, .. } | RecordError::UnknownType { line, .. } => *line,
        }
    }

    fn schema(line: usize, message: impl Into<String>) -> Self {
        RecordError::Schema {
            line,
            message: message.into(),
        }
    }
}

/// Occurrence counts for one paraphrase type.
///
/// For sentence pairs, `total` counts every annotated instance (a type may
/// occur several times in one pair) and `unique` counts pairs. For preference
/// records, `total` counts records and `unique` counts distinct originals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeCount {
    pub total: usize,
    pub unique: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeCounts(BTreeMap<ParaphraseType, TypeCount>);

impl TypeCounts {
    pub fn get(&self, t: ParaphraseType) -> TypeCount {
        self.0.get(&t).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParaphraseType, TypeCount)> + '_ {
        self.0.iter().map(|(t, c)| (*t, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn entry(&mut self, t: ParaphraseType) -> &mut TypeCount {
        self.0.entry(t).or_default()
    }
}

/// Records that loaded cleanly plus everything that did not.
#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
    pub type_counts: TypeCounts,
}

/// Which invariants a `pairs.jsonl` file must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSchema {
    /// Typed corpora (ETPC): every paraphrase must carry at least one type.
    Typed,
    /// Binary paraphrase corpora (QQP): types may be empty.
    Binary,
}

#[derive(Deserialize)]
struct RawPair {
    id: String,
    original: String,
    paraphrase: String,
    types: Vec<String>,
    is_paraphrase: bool,
}

#[derive(Deserialize)]
struct RawPref {
    id: String,
    original: String,
    target_type: String,
    chosen: String,
    rejected: String,
}

#[derive(Deserialize)]
struct RawAnnotation {
    item_id: String,
    model_id: String,
    target_type: String,
    annotator_id: String,
    rank: i64,
    #[serde(default)]
    valid: Option<bool>,
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path).map(BufReader::new).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Iterates non-blank lines with their 1-based numbers.
fn for_each_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, &str),
) -> Result<(), CorpusError> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<input>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        f(idx + 1, &line);
    }
    Ok(())
}

fn non_empty(line: usize, field: &str, raw: &str) -> Result<String, RecordError> {
    let text = normalize_text(raw);
    if text.is_empty() {
        return Err(RecordError::schema(line, format!("`{field}` is empty")));
    }
    Ok(text)
}

fn lookup(line: usize, label: &str) -> Result<ParaphraseType, RecordError> {
    parse_type(label).map_err(|_| RecordError::UnknownType {
        line,
        label: label.to_string(),
    })
}

pub fn read_pairs<R: BufRead>(
    reader: R,
    schema: PairSchema,
) -> Result<LoadReport<SentencePairRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut counts = TypeCounts::default();
    let mut seen = HashSet::new();

    for_each_line(reader, |line, text| {
        let parsed = (|| {
            let raw: RawPair =
                serde_json::from_str(text).map_err(|e| RecordError::schema(line, e.to_string()))?;
            let original = non_empty(line, "original", &raw.original)?;
            let paraphrase = non_empty(line, "paraphrase", &raw.paraphrase)?;
            let labels = raw
                .types
                .iter()
                .map(|l| lookup(line, l))
                .collect::<Result<Vec<_>, _>>()?;
            if schema == PairSchema::Typed && raw.is_paraphrase && labels.is_empty() {
                return Err(RecordError::schema(line, "paraphrase without types"));
            }
            if !seen.insert(raw.id.clone()) {
                return Err(RecordError::schema(line, format!("duplicate id {:?}", raw.id)));
            }
            Ok((
                SentencePairRecord {
                    id: raw.id,
                    original,
                    paraphrase,
                    types: labels.iter().copied().collect(),
                    is_paraphrase: raw.is_paraphrase,
                },
                labels,
            ))
        })();
        match parsed {
            Ok((record, labels)) => {
                for &t in &labels {
                    counts.entry(t).total += 1;
                }
                for t in record.types.iter() {
                    counts.entry(t).unique += 1;
                }
                records.push(record);
            }
            Err(e) => errors.push(e),
        }
    })?;

    Ok(LoadReport {
        records,
        errors,
        type_counts: counts,
    })
}

pub fn read_prefs<R: BufRead>(reader: R) -> Result<LoadReport<PreferenceRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut originals: BTreeMap<ParaphraseType, BTreeSet<String>> = BTreeMap::new();
    let mut counts = TypeCounts::default();

    for_each_line(reader, |line, text| {
        let parsed = (|| {
            let raw: RawPref =
                serde_json::from_str(text).map_err(|e| RecordError::schema(line, e.to_string()))?;
            let target_type = lookup(line, &raw.target_type)?;
            let record = PreferenceRecord {
                original: non_empty(line, "original", &raw.original)?,
                chosen: non_empty(line, "chosen", &raw.chosen)?,
                rejected: non_empty(line, "rejected", &raw.rejected)?,
                target_type,
                id: raw.id,
            };
            if record.chosen == record.rejected {
                return Err(RecordError::schema(line, "chosen and rejected are identical"));
            }
            if !seen.insert(record.id.clone()) {
                return Err(RecordError::schema(line, format!("duplicate id {:?}", record.id)));
            }
            Ok(record)
        })();
        match parsed {
            Ok(record) => {
                counts.entry(record.target_type).total += 1;
                originals
                    .entry(record.target_type)
                    .or_default()
                    .insert(record.original.clone());
                records.push(record);
            }
            Err(e) => errors.push(e),
        }
    })?;

    for (t, set) in originals {
        counts.entry(t).unique = set.len();
    }
    Ok(LoadReport {
        records,
        errors,
        type_counts: counts,
    })
}

pub fn read_annotations<R: BufRead>(
    reader: R,
) -> Result<LoadReport<AnnotationRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut counts = TypeCounts::default();

    for_each_line(reader, |line, text| {
        let parsed = (|| {
            let raw: RawAnnotation =
                serde_json::from_str(text).map_err(|e| RecordError::schema(line, e.to_string()))?;
            let target_type = lookup(line, &raw.target_type)?;
            if !(1..=4).contains(&raw.rank) {
                return Err(RecordError::schema(line, format!("rank {} outside 1..=4", raw.rank)));
            }
            let rank = raw.rank as u8;
            let valid = raw.valid.unwrap_or(rank < 4);
            if !valid && rank != 4 {
                return Err(RecordError::schema(line, "invalid paraphrase must have rank 4"));
            }
            let key = (raw.item_id.clone(), raw.model_id.clone(), raw.annotator_id.clone());
            if !seen.insert(key) {
                return Err(RecordError::schema(line, "duplicate (item_id, model_id, annotator_id)"));
            }
            Ok(AnnotationRecord {
                item_id: raw.item_id,
                model_id: raw.model_id,
                target_type,
                annotator_id: raw.annotator_id,
                rank,
                valid,
            })
        })();
        match parsed {
            Ok(record) => {
                let c = counts.entry(record.target_type);
                c.total += 1;
                c.unique += 1;
                records.push(record);
            }
            Err(e) => errors.push(e),
        }
    })?;

    Ok(LoadReport {
        records,
        errors,
        type_counts: counts,
    })
}

pub fn load_pairs(
    path: impl AsRef<Path>,
    schema: PairSchema,
) -> Result<LoadReport<SentencePairRecord>, CorpusError> {
    read_pairs(open(path.as_ref())?, schema)
}

/// Loads an ETPC-style typed `pairs.jsonl`.
pub fn load_etpc(path: impl AsRef<Path>) -> Result<LoadReport<SentencePairRecord>, CorpusError> {
    load_pairs(path, PairSchema::Typed)
}

/// Loads an APTY-style `prefs.jsonl`.
pub fn load_apty_ranked(
    path: impl AsRef<Path>,
) -> Result<LoadReport<PreferenceRecord>, CorpusError> {
    read_prefs(open(path.as_ref())?)
}

pub fn load_annotations(
    path: impl AsRef<Path>,
) -> Result<LoadReport<AnnotationRecord>, CorpusError> {
    read_annotations(open(path.as_ref())?)
}

/// Writes one JSON object per line with LF endings.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize to JSON");
        out.write_all(line.as_bytes()).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> LoadReport<SentencePairRecord> {
        read_pairs(text.as_bytes(), PairSchema::Typed).unwrap()
    }

    #[test]
    fn well_formed_lines_load() {
        let report = pairs(concat!(
            r#"{"id":"1","original":"The cat sat.","paraphrase":"The big cat sat.","types":["Addition/Deletion"],"is_paraphrase":true}"#,
            "\n",
            r#"{"id":"2","original":" It’s  here ","paraphrase":"It is here","types":["synthetic/analytic substitution","Addition/Deletion","Addition/Deletion"],"is_paraphrase":true}"#,
            "\n"
        ));
        assert_eq!(report.records.len(), 2);
        assert!(report.errors.is_empty());
        assert_eq!(report.records[1].original, "It's here");
        let add = report.type_counts.get(ParaphraseType::ADDITION_DELETION);
        assert_eq!(add, TypeCount { total: 3, unique: 2 });
        assert_eq!(
            report.type_counts.get(ParaphraseType::SYNTHETIC_ANALYTIC),
            TypeCount { total: 1, unique: 1 }
        );
    }

    #[test]
    fn missing_field_is_a_line_error() {
        let report = pairs(concat!(
            r#"{"id":"1","paraphrase":"x","types":["Identity"],"is_paraphrase":true}"#,
            "\n",
            r#"{"id":"2","original":"a","paraphrase":"b","types":["Identity"],"is_paraphrase":true}"#,
        ));
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.errors.len(), 1);
        assert!(matches!(&report.errors[0], RecordError::Schema { line: 1, message } if message.contains("original")));
    }

    #[test]
    fn unknown_type_is_reported_with_line() {
        let report = pairs(concat!(
            "\n",
            r#"{"id":"1","original":"a","paraphrase":"b","types":["Paraphrase"],"is_paraphrase":true}"#,
        ));
        assert_eq!(
            report.errors,
            vec![RecordError::UnknownType { line: 2, label: "Paraphrase".into() }]
        );
    }

    #[test]
    fn typed_schema_requires_types_binary_does_not() {
        let line = r#"{"id":"q1","original":"How are you?","paraphrase":"How do you do?","types":[],"is_paraphrase":true}"#;
        assert_eq!(pairs(line).errors.len(), 1);
        let binary = read_pairs(line.as_bytes(), PairSchema::Binary).unwrap();
        assert_eq!(binary.records.len(), 1);
        assert!(binary.records[0].types.is_empty());
    }

    #[test]
    fn duplicate_ids_and_bad_json() {
        let report = pairs(concat!(
            r#"{"id":"1","original":"a","paraphrase":"b","types":["Identity"],"is_paraphrase":true}"#,
            "\n",
            r#"{"id":"1","original":"c","paraphrase":"d","types":["Identity"],"is_paraphrase":true}"#,
            "\n",
            "not json\n",
        ));
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.errors.iter().map(RecordError::line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn prefs_count_unique_originals() {
        let report = read_prefs(
            concat!(
                r#"{"id":"a","original":"S one.","target_type":"Change of order","chosen":"x y","rejected":"y x"}"#,
                "\n",
                r#"{"id":"b","original":"S one. ","target_type":"change of order","chosen":"x z","rejected":"z x"}"#,
                "\n",
                r#"{"id":"c","original":"S two.","target_type":"Change of order","chosen":"same","rejected":" same"}"#,
            )
            .as_bytes(),
        )
        .unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(
            report.type_counts.get(ParaphraseType::CHANGE_OF_ORDER),
            TypeCount { total: 2, unique: 1 }
        );
    }

    #[test]
    fn annotation_validity_defaults_from_rank() {
        let report = read_annotations(
            concat!(
                r#"{"item_id":"i","model_id":"m","target_type":"Identity","annotator_id":"a","rank":4}"#,
                "\n",
                r#"{"item_id":"i","model_id":"n","target_type":"Identity","annotator_id":"a","rank":2}"#,
                "\n",
                r#"{"item_id":"i","model_id":"o","target_type":"Identity","annotator_id":"a","rank":5}"#,
                "\n",
                r#"{"item_id":"i","model_id":"p","target_type":"Identity","annotator_id":"a","rank":1,"valid":false}"#,
            )
            .as_bytes(),
        )
        .unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(!report.records[0].valid);
        assert!(report.records[1].valid);
        assert_eq!(report.errors.len(), 2);
    }

    #[test]
    fn write_then_load_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        let records = vec![SentencePairRecord {
            id: "x".into(),
            original: "A b.".into(),
            paraphrase: "A, b.".into(),
            types: ParaphraseType::PUNCTUATION_CHANGES.into(),
            is_paraphrase: true,
        }];
        write_jsonl(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "{\"id\":\"x\",\"original\":\"A b.\",\"paraphrase\":\"A, b.\",\"types\":[\"Punctuation changes\"],\"is_paraphrase\":true}\n"
        );
        assert_eq!(load_etpc(&path).unwrap().records, records);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_etpc("/nonexistent/pairs.jsonl"),
            Err(CorpusError::Io { .. })
        ));
    }
}

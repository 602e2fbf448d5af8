//! `ptd_preds.jsonl`: `{"id","logits":[10 reals]}` or `{"id","predicted":[labels]}`.

use std::collections::HashSet;
use std::io::BufRead;

use serde::Deserialize;

use crate::taxonomy::TypeSet;

use super::{decide, PtdError, CLASS_COUNT};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    id: String,
    logits: Option<Vec<f64>>,
    predicted: Option<TypeSet>,
}

/// One detector output after thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdPrediction {
    pub id: String,
    pub logits: Option<[f64; CLASS_COUNT]>,
    pub predicted: TypeSet,
}

/// Reads predictions, thresholding logit lines at `threshold`.
pub fn read_ptd_preds<R: BufRead>(reader: R, threshold: f64) -> Result<Vec<PtdPrediction>, PtdError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let schema = |message: String| PtdError::Schema { line: line_no, message };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPrediction = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if !seen.insert(raw.id.clone()) {
            return Err(schema(format!("duplicate id {:?}", raw.id)));
        }
        let pred = match (raw.logits, raw.predicted) {
            (Some(z), None) => {
                let z: [f64; CLASS_COUNT] = z
                    .try_into()
                    .map_err(|z: Vec<f64>| schema(format!("expected {CLASS_COUNT} logits, got {}", z.len())))?;
                if z.iter().any(|v| v.is_nan()) {
                    return Err(schema("NaN logit".into()));
                }
                PtdPrediction { id: raw.id, logits: Some(z), predicted: decide(&z, threshold) }
            }
            (None, Some(set)) => PtdPrediction { id: raw.id, logits: None, predicted: set },
            _ => return Err(schema("need exactly one of \"logits\" or \"predicted\"".into())),
        };
        out.push(pred);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::ParaphraseType;

    #[test]
    fn both_shapes_parse() {
        let text = r#"{"id":"a","logits":[1,-1,-1,-1,-1,-1,-1,-1,-1,0]}
{"id":"b","predicted":["Change of order","spelling changes"]}
"#;
        let p = read_ptd_preds(text.as_bytes(), 0.5).unwrap();
        assert_eq!(
            p[0].predicted,
            [ParaphraseType::ADDITION_DELETION, ParaphraseType::SYNTHETIC_ANALYTIC].into_iter().collect()
        );
        assert_eq!(
            p[1].predicted,
            [ParaphraseType::CHANGE_OF_ORDER, ParaphraseType::SPELLING_CHANGES].into_iter().collect()
        );
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            r#"{"id":"a","logits":[1,2]}"#,
            r#"{"id":"a"}"#,
            r#"{"id":"a","logits":[0,0,0,0,0,0,0,0,0,0],"predicted":[]}"#,
            r#"{"id":"a","predicted":["Paraphrase"]}"#,
        ] {
            assert!(matches!(read_ptd_preds(bad.as_bytes(), 0.5), Err(PtdError::Schema { line: 1, .. })), "{bad}");
        }
        let dup = "{\"id\":\"a\",\"predicted\":[]}\n{\"id\":\"a\",\"predicted\":[]}";
        assert!(matches!(read_ptd_preds(dup.as_bytes(), 0.5), Err(PtdError::Schema { line: 2, .. })));
    }
}

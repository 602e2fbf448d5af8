//! The `scored.jsonl` wire format: one line per (id, role) with per-token scores.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{PrefBatchItem, PrefLossError, ScoredSequence, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoredRole {
    Chosen,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredLine {
    pub id: String,
    pub role: ScoredRole,
    pub token_ids: Vec<u32>,
    pub policy_logprobs: Vec<f64>,
    pub reference_logprobs: Vec<f64>,
}

impl ScoredLine {
    pub fn from_sequence(id: &str, role: ScoredRole, s: &ScoredSequence) -> Self {
        Self {
            id: id.to_string(),
            role,
            token_ids: s.token_ids().to_vec(),
            policy_logprobs: s.logprobs(Scorer::Policy).to_vec(),
            reference_logprobs: s.logprobs(Scorer::Reference).to_vec(),
        }
    }
}

/// Reads scored lines and joins the chosen and rejected side of every id.
///
/// Items come back in order of each id's first appearance.
pub fn read_scored<R: BufRead>(reader: R) -> Result<Vec<(String, PrefBatchItem)>, PrefLossError> {
    let mut order: Vec<String> = Vec::new();
    let mut sides: HashMap<String, [Option<ScoredSequence>; 2]> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| PrefLossError::Schema { line: line_no, message };
        let raw: ScoredLine = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        let seq = ScoredSequence::new(raw.token_ids, raw.policy_logprobs, raw.reference_logprobs)
            .map_err(|e| schema(e.to_string()))?;
        let slot = sides.entry(raw.id.clone()).or_insert_with(|| {
            order.push(raw.id.clone());
            [None, None]
        });
        let k = match raw.role {
            ScoredRole::Chosen => 0,
            ScoredRole::Rejected => 1,
        };
        if slot[k].replace(seq).is_some() {
            return Err(schema(format!("duplicate {:?} side for id {:?}", raw.role, raw.id)));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let [chosen, rejected] = sides.remove(&id).expect("every ordered id has an entry");
            match (chosen, rejected) {
                (Some(chosen), Some(rejected)) => Ok((id, PrefBatchItem { chosen, rejected })),
                _ => Err(PrefLossError::Unpaired(id)),
            }
        })
        .collect()
}

pub fn write_scored<W: Write>(
    mut out: W,
    items: &[(String, PrefBatchItem)],
) -> Result<(), PrefLossError> {
    for (id, item) in items {
        for (role, s) in [(ScoredRole::Chosen, &item.chosen), (ScoredRole::Rejected, &item.rejected)] {
            let line = serde_json::to_string(&ScoredLine::from_sequence(id, role, s))
                .expect("scored lines always serialize");
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefloss::sequence_logprob;

    const FIXTURE: &str = r#"{"id":"b","role":"rejected","token_ids":[4],"policy_logprobs":[-2.0],"reference_logprobs":[-1.5]}
{"id":"a","role":"chosen","token_ids":[1,2,3],"policy_logprobs":[-0.5,-1.0,-0.25],"reference_logprobs":[-1.0,-1.0,-1.0]}
{"id":"b","role":"chosen","token_ids":[5,6],"policy_logprobs":[-0.1,-0.2],"reference_logprobs":[-0.3,-0.3]}
{"id":"a","role":"rejected","token_ids":[7],"policy_logprobs":[-3.0],"reference_logprobs":[-2.0]}
"#;

    #[test]
    fn sides_are_joined_by_id() {
        let items = read_scored(FIXTURE.as_bytes()).unwrap();
        let ids: Vec<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
        let a = &items[1].1;
        assert_eq!(sequence_logprob(&a.chosen, Scorer::Policy), -1.75);
        assert_eq!(a.rejected.token_ids(), &[7]);
    }

    #[test]
    fn round_trip_is_exact() {
        let items = read_scored(FIXTURE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_scored(&mut buf, &items).unwrap();
        assert_eq!(read_scored(buf.as_slice()).unwrap(), items);
    }

    #[test]
    fn unpaired_and_malformed_lines_fail() {
        let one = FIXTURE.lines().next().unwrap();
        assert!(matches!(read_scored(one.as_bytes()), Err(PrefLossError::Unpaired(id)) if id == "b"));

        let twice = format!("{one}\n{one}\n");
        assert!(matches!(read_scored(twice.as_bytes()), Err(PrefLossError::Schema { line: 2, .. })));

        let positive = r#"{"id":"x","role":"chosen","token_ids":[1],"policy_logprobs":[0.5],"reference_logprobs":[-1.0]}"#;
        assert!(matches!(read_scored(positive.as_bytes()), Err(PrefLossError::Schema { line: 1, .. })));

        let bad_role = r#"{"id":"x","role":"winner","token_ids":[1],"policy_logprobs":[-0.5],"reference_logprobs":[-1.0]}"#;
        assert!(matches!(read_scored(bad_role.as_bytes()), Err(PrefLossError::Schema { .. })));
    }
}

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use apt_align_core::corpus::{load_pairs, PairSchema};
use apt_align_core::ptd::{evaluate_ptd, heuristic_detect, read_ptd_preds};
use apt_align_core::taxonomy::TypeSet;

use super::data::strict;
use crate::args::PtdEvalArgs;
use crate::config::{pick, RunConfig};
use crate::error::CliError;
use crate::io::{fmt4, path_string, write_csv, write_text};
use crate::write_run_record;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn ptd_eval(a: &PtdEvalArgs, cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let threshold = pick(a.threshold, cfg.ptd.threshold, DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Schema(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut inputs = BTreeMap::from([("gold", path_string(&a.gold))]);
    if let Some(p) = &a.preds {
        inputs.insert("preds", path_string(p));
    }
    let detector = if a.heuristic { "heuristic" } else { "file" };
    write_run_record(
        out,
        "ptd-eval",
        seed,
        inputs,
        serde_json::json!({ "threshold": threshold, "detector": detector }),
    )?;

    let gold_records = strict(load_pairs(&a.gold, PairSchema::Binary)?, &a.gold)?;
    let gold: Vec<TypeSet> = gold_records.iter().map(|r| r.types).collect();
    let predicted: Vec<TypeSet> = match &a.preds {
        None => gold_records.iter().map(heuristic_detect).collect(),
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let preds = read_ptd_preds(BufReader::new(file), threshold)?;
            let mut by_id: HashMap<String, TypeSet> = preds.into_iter().map(|p| (p.id, p.predicted)).collect();
            let mut out = Vec::with_capacity(gold_records.len());
            for r in &gold_records {
                let p = by_id
                    .remove(&r.id)
                    .ok_or_else(|| CliError::MissingData(format!("no prediction for pair {:?}", r.id)))?;
                out.push(p);
            }
            if let Some(extra) = by_id.keys().min() {
                return Err(CliError::Schema(format!("prediction for unknown pair {extra:?}")));
            }
            out
        }
    };
    let report = evaluate_ptd(&predicted, &gold, seed)?;
    write_text(&out.join("f1.csv"), &report.to_csv())?;
    let summary = vec![
        vec!["Macro F1".to_string(), fmt4(report.macro_f1)],
        vec!["Weighted F1".to_string(), fmt4(report.weighted_f1)],
        vec!["Examples".to_string(), gold.len().to_string()],
    ];
    write_csv(&out.join("f1_summary.csv"), &["Metric", "Value"], &summary)?;
    println!("macro F1 {:.4}, weighted F1 {:.4}", report.macro_f1, report.weighted_f1);
    Ok(())
}

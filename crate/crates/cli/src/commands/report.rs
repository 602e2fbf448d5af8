//! Markdown summary of a run directory.
//!
//! Known tables are rendered in a fixed order (dataset, training, accuracy,
//! rankings, significance, metrics, detection). The run directory and its
//! immediate subdirectories are searched; output depends only on file
//! contents and relative paths, so regenerating is byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::args::ReportArgs;
use crate::error::CliError;
use crate::io::{markdown_table, path_string, read_csv, write_text};
use crate::write_run_record;

pub const SECTIONS: [(&str, &str); 13] = [
    ("type_counts.csv", "Paraphrase type frequencies"),
    ("curves.csv", "Training curves"),
    ("accuracy.csv", "Accuracy"),
    ("accuracy_by_type.csv", "Accuracy by type"),
    ("rank_distribution.csv", "Ranking distribution (%)"),
    ("rank_counts.csv", "Ranking counts"),
    ("statistics.csv", "Significance and agreement"),
    ("metrics_by_model.csv", "Automatic metrics by model"),
    ("correlation_pearson.csv", "Metric and human ranking correlation (Pearson)"),
    ("correlation_spearman.csv", "Metric and human ranking correlation (Spearman)"),
    ("f1.csv", "Type detection F1"),
    ("f1_summary.csv", "Type detection summary"),
    ("rejects.csv", "Rejected input lines"),
];

/// CSV files in `root` and its immediate subdirectories, keyed by the
/// path relative to `root`. `skip` (if inside `root`) is left out.
fn csv_files(root: &Path, skip: Option<&Path>) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let skip = skip.and_then(|s| fs::canonicalize(s).ok());
    let mut out = BTreeMap::new();
    let list = |dir: &Path| -> Result<Vec<PathBuf>, CliError> {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|e| CliError::io(dir, e)))
            .collect::<Result<_, _>>()?;
        v.sort();
        Ok(v)
    };
    for entry in list(root)? {
        if entry.is_dir() {
            if skip.is_some() && fs::canonicalize(&entry).ok() == skip {
                continue;
            }
            let sub = entry.file_name().unwrap().to_string_lossy().into_owned();
            for inner in list(&entry)? {
                if inner.is_file() && inner.extension().is_some_and(|e| e == "csv") {
                    let name = inner.file_name().unwrap().to_string_lossy().into_owned();
                    out.insert(format!("{sub}/{name}"), inner);
                }
            }
        } else if entry.extension().is_some_and(|e| e == "csv") {
            out.insert(entry.file_name().unwrap().to_string_lossy().into_owned(), entry);
        }
    }
    Ok(out)
}

fn file_name(rel: &str) -> &str {
    rel.rsplit('/').next().unwrap_or(rel)
}

/// Renders every known table under `root` as markdown.
pub fn render_dir(root: &Path, skip: Option<&Path>) -> Result<String, CliError> {
    let files = csv_files(root, skip)?;
    let mut md = String::from("# Run report\n");
    for (name, title) in SECTIONS {
        for (rel, path) in files.iter().filter(|(rel, _)| file_name(rel) == name) {
            let (header, rows) = read_csv(path)?;
            md.push_str(&format!("\n## {title}\n\n"));
            if rel.contains('/') {
                md.push_str(&format!("Source: `{rel}`\n\n"));
            }
            md.push_str(&markdown_table(&header, &rows));
        }
    }
    Ok(md)
}

pub fn report(a: &ReportArgs, out: &Path, seed: u64) -> Result<(), CliError> {
    if !a.run.is_dir() {
        return Err(CliError::MissingData(format!("{} is not a directory", a.run.display())));
    }
    write_run_record(
        out,
        "report",
        seed,
        BTreeMap::from([("run", path_string(&a.run))]),
        serde_json::json!({}),
    )?;
    for (rel, path) in csv_files(&a.run, Some(out))? {
        let target = out.join(rel.replace('/', "__"));
        fs::copy(&path, &target).map_err(|e| CliError::io(&target, e))?;
    }
    write_text(&out.join("report.md"), &render_dir(&a.run, Some(out))?)
}

use std::collections::BTreeMap;
use std::path::Path;

use apt_align_core::corpus::load_annotations;

use super::data::{load_generations, strict};
use super::report::render_dir;
use crate::args::EvalArgs;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::eval::{evaluate, CorrelationMatrix, EvalReport, METRIC_NAMES};
use crate::io::{fmt4, fmt_opt, path_string, read_jsonl, write_csv, write_json, write_text};
use crate::schema::Reference;
use crate::write_run_record;

pub const DEFAULT_BLEU_MAX_N: usize = 4;

pub fn fmt_p(p: f64) -> String {
    format!("{p:.3e}")
}

fn correlation_rows(m: &CorrelationMatrix) -> Vec<Vec<String>> {
    m.variables
        .iter()
        .zip(&m.values)
        .map(|(name, row)| std::iter::once(name.clone()).chain(row.iter().map(|v| fmt_opt(*v))).collect())
        .collect()
}

fn statistics_rows(r: &EvalReport) -> Vec<Vec<String>> {
    let na = || "n/a".to_string();
    let mut rows = Vec::new();
    rows.push(match &r.chi_square {
        Some(c) => vec!["Chi-square".into(), fmt4(c.stat), c.df.to_string(), fmt_p(c.p)],
        None => vec!["Chi-square".into(), na(), na(), na()],
    });
    rows.push(match &r.anova {
        Some(a) => vec![
            "ANOVA F".into(),
            fmt4(a.f),
            format!("{}; {}", a.df_between, a.df_within),
            fmt_p(a.p),
        ],
        None => vec!["ANOVA F".into(), na(), na(), na()],
    });
    rows.push(vec!["Cohen's kappa".into(), fmt_opt(r.cohen_kappa), na(), na()]);
    rows.push(vec!["Krippendorff's alpha (ordinal)".into(), fmt_opt(r.krippendorff_alpha), na(), na()]);
    rows
}

/// Writes every table of `r` as CSV into `out`, plus `eval.json` and `report.md`.
pub fn write_eval(r: &EvalReport, out: &Path) -> Result<(), CliError> {
    let acc: Vec<Vec<String>> = r
        .accuracy
        .iter()
        .map(|a| vec![a.model.clone(), a.items.to_string(), a.correct.to_string(), fmt4(a.accuracy)])
        .collect();
    write_csv(&out.join("accuracy.csv"), &["Model", "Items", "Correct", "Accuracy"], &acc)?;
    let by_type: Vec<Vec<String>> = r
        .accuracy_by_type
        .iter()
        .map(|a| {
            vec![
                a.model.clone(),
                a.target_type.label().to_string(),
                a.items.to_string(),
                a.correct.to_string(),
                fmt4(a.accuracy),
            ]
        })
        .collect();
    write_csv(&out.join("accuracy_by_type.csv"), &["Model", "Type", "Items", "Correct", "Accuracy"], &by_type)?;

    let rank_header = ["Model", "1", "2", "3", "4"];
    let pct: Vec<Vec<String>> = r
        .rank_distribution
        .iter()
        .map(|d| std::iter::once(d.model.clone()).chain(d.percentages.iter().map(|p| format!("{p:.2}"))).collect())
        .collect();
    write_csv(&out.join("rank_distribution.csv"), &rank_header, &pct)?;
    let counts: Vec<Vec<String>> = r
        .rank_distribution
        .iter()
        .map(|d| std::iter::once(d.model.clone()).chain(d.counts.iter().map(u64::to_string)).collect())
        .collect();
    write_csv(&out.join("rank_counts.csv"), &rank_header, &counts)?;
    write_csv(&out.join("statistics.csv"), &["Statistic", "Value", "df", "p"], &statistics_rows(r))?;

    if !r.scores.is_empty() {
        let per_gen: Vec<Vec<String>> = r
            .scores
            .iter()
            .map(|s| {
                vec![
                    s.item_id.clone(),
                    s.model_id.clone(),
                    fmt4(s.bleu),
                    fmt4(s.rouge1),
                    fmt4(s.rouge2),
                    fmt4(s.rouge_l),
                    fmt4(s.mean_rank),
                    fmt4(s.human),
                ]
            })
            .collect();
        let mut header = vec!["Item", "Model"];
        header.extend(METRIC_NAMES);
        header.extend(["Mean Rank", "Human"]);
        write_csv(&out.join("metrics.csv"), &header, &per_gen)?;

        let by_model: Vec<Vec<String>> = r
            .models
            .iter()
            .map(|m| {
                let mine: Vec<_> = r.scores.iter().filter(|s| &s.model_id == m).collect();
                let mean = |f: fn(&crate::eval::GenerationScores) -> f64| {
                    fmt4(mine.iter().map(|s| f(s)).sum::<f64>() / mine.len() as f64)
                };
                vec![
                    m.clone(),
                    mean(|s| s.bleu),
                    mean(|s| s.rouge1),
                    mean(|s| s.rouge2),
                    mean(|s| s.rouge_l),
                    mean(|s| s.mean_rank),
                ]
            })
            .collect();
        let mut header = vec!["Model"];
        header.extend(METRIC_NAMES);
        header.push("Mean Rank");
        write_csv(&out.join("metrics_by_model.csv"), &header, &by_model)?;
    }
    for (name, m) in [("correlation_pearson.csv", &r.pearson), ("correlation_spearman.csv", &r.spearman)] {
        if let Some(m) = m {
            let mut header = vec!["Metric"];
            header.extend(m.variables.iter().map(String::as_str));
            write_csv(&out.join(name), &header, &correlation_rows(m))?;
        }
    }
    write_json(&out.join("eval.json"), r)?;
    write_text(&out.join("report.md"), &render_dir(out, None)?)
}

pub fn eval(a: &EvalArgs, cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let max_n = cfg.eval.bleu_max_n.unwrap_or(DEFAULT_BLEU_MAX_N);
    if max_n == 0 {
        return Err(CliError::Schema("bleu_max_n must be at least 1".into()));
    }
    let mut inputs = BTreeMap::from([
        ("generations", path_string(&a.generations)),
        ("annotations", path_string(&a.annotations)),
    ]);
    if let Some(r) = &a.references {
        inputs.insert("references", path_string(r));
    }
    write_run_record(out, "eval", seed, inputs, serde_json::json!({ "bleu_max_n": max_n }))?;

    let gens = load_generations(&a.generations)?;
    let anns = strict(load_annotations(&a.annotations)?, &a.annotations)?;
    let refs: Option<Vec<Reference>> = match &a.references {
        Some(p) => {
            let refs: Vec<Reference> = read_jsonl(p)?;
            if let Some(r) = refs.iter().find(|r| r.reference.trim().is_empty()) {
                return Err(CliError::Schema(format!("empty reference for item {:?}", r.item_id)));
            }
            Some(refs)
        }
        None => None,
    };
    let report = evaluate(&gens, &anns, refs.as_deref(), max_n)?;
    write_eval(&report, out)?;
    for acc in &report.accuracy {
        println!("{}: accuracy {:.4} ({}/{})", acc.model, acc.accuracy, acc.correct, acc.items);
    }
    Ok(())
}

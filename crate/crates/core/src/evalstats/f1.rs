use serde::Serialize;

use crate::rng::SeededRng;
use crate::taxonomy::{ParaphraseType, TypeSet};

use super::bootstrap::quantile_type7;
use super::EvalError;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Row {
    pub class: ParaphraseType,
    pub f1: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Report {
    pub per_class: Vec<F1Row>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

impl F1Report {
    pub fn row(&self, class: ParaphraseType) -> Option<&F1Row> {
        self.per_class.iter().find(|r| r.class == class)
    }

    /// CSV with the columns `Class,F1,CI Lower,CI Upper,Support`, four decimals.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["Class", "F1", "CI Lower", "CI Upper", "Support"])
            .expect("writing to memory");
        for r in &self.per_class {
            w.write_record([
                r.class.label().to_string(),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.ci_lower),
                format!("{:.4}", r.ci_upper),
                r.support.to_string(),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Confusion {
    fn f1(self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

fn confusions(
    predicted: &[TypeSet],
    gold: &[TypeSet],
    classes: &[ParaphraseType],
    rows: impl Iterator<Item = usize>,
) -> Vec<Confusion> {
    let mut out = vec![Confusion::default(); classes.len()];
    for i in rows {
        for (k, &c) in classes.iter().enumerate() {
            match (predicted[i].contains(c), gold[i].contains(c)) {
                (true, true) => out[k].tp += 1,
                (true, false) => out[k].fp += 1,
                (false, true) => out[k].fn_ += 1,
                (false, false) => {}
            }
        }
    }
    out
}

/// Per-class F1 over set membership, with macro and support-weighted means.
///
/// Confidence bounds are set equal to the point F1; see [`f1_with_ci`].
pub fn f1_scores(predicted: &[TypeSet], gold: &[TypeSet], classes: TypeSet) -> Result<F1Report, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch(predicted.len(), gold.len()));
    }
    let classes: Vec<ParaphraseType> = classes.iter().collect();
    let conf = confusions(predicted, gold, &classes, 0..gold.len());
    let per_class: Vec<F1Row> = classes
        .iter()
        .zip(&conf)
        .map(|(&class, c)| {
            let f1 = c.f1();
            F1Row { class, f1, ci_lower: f1, ci_upper: f1, support: c.tp + c.fn_ }
        })
        .collect();
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|r| r.f1).sum::<f64>() / per_class.len() as f64
    };
    let total: usize = per_class.iter().map(|r| r.support).sum();
    let weighted_f1 = if total == 0 {
        0.0
    } else {
        per_class.iter().map(|r| r.support as f64 * r.f1).sum::<f64>() / total as f64
    };
    Ok(F1Report { per_class, macro_f1, weighted_f1 })
}

/// [`f1_scores`] with percentile-bootstrap bounds per class, resampling examples.
///
/// Every resample uses its own substream of `seed`. Bounds are widened when
/// needed so that each interval contains its point estimate.
pub fn f1_with_ci(
    predicted: &[TypeSet],
    gold: &[TypeSet],
    classes: TypeSet,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<F1Report, EvalError> {
    let mut report = f1_scores(predicted, gold, classes)?;
    if gold.len() < 2 {
        return Err(EvalError::InsufficientData("bootstrap needs at least 2 examples"));
    }
    if n_resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(EvalError::InvalidParameter("need n_resamples > 0 and level in (0, 1)"));
    }
    let class_list: Vec<ParaphraseType> = classes.iter().collect();
    let n = gold.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples); class_list.len()];
    for b in 0..n_resamples {
        let mut rng = SeededRng::substream(seed, b as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
        for (k, c) in confusions(predicted, gold, &class_list, idx.into_iter()).into_iter().enumerate() {
            samples[k].push(c.f1());
        }
    }
    let tail = (1.0 - level) / 2.0;
    for (row, s) in report.per_class.iter_mut().zip(&mut samples) {
        s.sort_by(f64::total_cmp);
        row.ci_lower = quantile_type7(s, tail).min(row.f1);
        row.ci_upper = quantile_type7(s, 1.0 - tail).max(row.f1);
    }
    Ok(report)
}

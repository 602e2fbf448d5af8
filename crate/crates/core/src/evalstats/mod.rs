//! Statistics for evaluating generated paraphrases and type detectors.

mod agreement;
mod bootstrap;
mod f1;
mod significance;
pub mod special;

pub use agreement::{cohens_kappa, krippendorff_alpha, AlphaLevel};
pub use bootstrap::{bootstrap_ci, quantile_type7};
pub use f1::{f1_scores, f1_with_ci, F1Report, F1Row, BOOTSTRAP_LEVEL, BOOTSTRAP_RESAMPLES};
pub use significance::{anova_oneway, chi_square, Anova, ChiSquare, ContingencyTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input is constant")]
    ConstantInput,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("expected agreement is total; the statistic is undefined")]
    DegenerateAgreement,
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Maps a 1 (best) to 4 (worst) rank onto (0, 1): `1 / (1 + e^(rank - 2.5))`.
pub fn logistic_rank_transform(rank: f64) -> f64 {
    1.0 / (1.0 + (rank - 2.5).exp())
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(EvalError::InsufficientData("correlation needs at least 3 points"));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    check_pair(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    check_pair(xs, ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic_rank_transform(2.5), 0.5);
        assert!((logistic_rank_transform(1.0) - 0.817574).abs() < 1e-6);
        assert!((logistic_rank_transform(4.0) - 0.182425).abs() < 1e-6);
        assert!(logistic_rank_transform(1.0) > logistic_rank_transform(2.0));
    }

    #[test]
    fn correlation_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let double: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        assert!((pearson(&xs, &double).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!((spearman(&xs, &[9.0, 4.0, 1.0, 0.5]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&xs, &[1.0; 4]), Err(EvalError::ConstantInput));
        assert_eq!(pearson(&xs, &[1.0; 3]), Err(EvalError::LengthMismatch(4, 3)));
        assert!(matches!(spearman(&[1.0, 2.0], &[2.0, 1.0]), Err(EvalError::InsufficientData(_))));
    }

    #[test]
    fn ties_get_average_rank() {
        assert_eq!(fractional_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    proptest! {
        #[test]
        fn logistic_symmetry(x in -50.0f64..50.0) {
            let s = logistic_rank_transform(2.5 + x) + logistic_rank_transform(2.5 - x);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pearson_affine(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..20),
            a in 0.1f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(r) = pearson(&xs, &ys) {
                let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let neg: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
                prop_assert!((pearson(&scaled, &ys).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&neg, &ys).unwrap() + r).abs() < 1e-9);
            }
        }
    }
}

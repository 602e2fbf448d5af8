use serde::Serialize;

use super::special::{chi_square_sf, f_sf};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Self {
        let row_labels = (0..counts.len()).map(|i| i.to_string()).collect();
        let cols = counts.first().map_or(0, Vec::len);
        let col_labels = (0..cols).map(|i| i.to_string()).collect();
        Self { counts, row_labels, col_labels }
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Self {
        self.row_labels = rows;
        self.col_labels = cols;
        self
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Copy without all-zero rows and columns.
    pub fn without_empty(&self) -> Self {
        let (rows, cols) = (self.row_sums(), self.col_sums());
        let keep_c: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > 0).collect();
        let keep_r: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] > 0).collect();
        Self {
            counts: keep_r
                .iter()
                .map(|&i| keep_c.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
            row_labels: keep_r.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: keep_c.iter().map(|&j| self.col_labels[j].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
}

/// Pearson's chi-square test of independence, without continuity correction.
pub fn chi_square(t: &ContingencyTable) -> Result<ChiSquare, EvalError> {
    let r = t.counts.len();
    let c = t.counts.first().map_or(0, Vec::len);
    if r < 2 || c < 2 {
        return Err(EvalError::DegenerateTable("needs at least 2 rows and 2 columns"));
    }
    if t.counts.iter().any(|row| row.len() != c) {
        return Err(EvalError::DegenerateTable("rows differ in length"));
    }
    let (rows, cols) = (t.row_sums(), t.col_sums());
    if rows.contains(&0) || cols.contains(&0) {
        return Err(EvalError::DegenerateTable("all-zero row or column"));
    }
    let total: u64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / total as f64;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let df = (r - 1) * (c - 1);
    Ok(ChiSquare { stat, df, p: chi_square_sf(stat, df as f64) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anova {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
}

/// One-way analysis of variance.
///
/// When every group is internally constant but the group means differ, `F` is
/// infinite and `p` is 0.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<Anova, EvalError> {
    if groups.len() < 2 {
        return Err(EvalError::DegenerateInput("needs at least 2 groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(EvalError::DegenerateInput("every group needs at least 2 values"));
    }
    let first = groups[0][0];
    if groups.iter().flatten().all(|&v| v == first) {
        return Err(EvalError::DegenerateInput("all values identical"));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let f = if ssw == 0.0 {
        if ssb == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (ssb / df_between as f64) / (ssw / df_within as f64)
    };
    Ok(Anova { f, df_between, df_within, p: f_sf(f, df_between as f64, df_within as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi_square_examples() {
        let prop = chi_square(&ContingencyTable::new(vec![vec![10, 20], vec![20, 40]])).unwrap();
        assert_eq!(prop.stat, 0.0);
        assert_eq!(prop.p, 1.0);

        let t = chi_square(&ContingencyTable::new(vec![vec![10, 20], vec![20, 10]])).unwrap();
        assert!((t.stat - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.df, 1);
        assert!((t.p - 0.009823).abs() < 1e-6);

        let four = ContingencyTable::new(vec![vec![6, 2, 1, 91], vec![33, 13, 9, 45], vec![40, 10, 8, 43], vec![34, 11, 8, 47]]);
        assert_eq!(chi_square(&four).unwrap().df, 9);
    }

    #[test]
    fn chi_square_rejects_degenerate_tables() {
        for counts in [vec![vec![1, 2]], vec![vec![1, 0], vec![2, 0]], vec![vec![1, 2], vec![3]]] {
            assert!(matches!(chi_square(&ContingencyTable::new(counts)), Err(EvalError::DegenerateTable(_))));
        }
        let t = ContingencyTable::new(vec![vec![1, 0, 2], vec![0, 0, 0], vec![3, 0, 1]]).without_empty();
        assert_eq!(t.counts, vec![vec![1, 2], vec![3, 1]]);
        assert_eq!(t.col_labels, ["0", "2"]);
    }

    #[test]
    fn anova_examples() {
        let a = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]).unwrap();
        assert!((a.f - 3.0).abs() < 1e-12);
        assert_eq!((a.df_between, a.df_within), (2, 6));
        // P(F(2,6) > 3) = (1 + 2*3/6)^-3 = 1/8
        assert!((a.p - 0.125).abs() < 1e-12);

        let same = anova_oneway(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!((same.f, same.p), (0.0, 1.0));

        let split = anova_oneway(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!((split.f, split.p), (f64::INFINITY, 0.0));

        let binary: Vec<Vec<f64>> = (0..4).map(|g| (0..260).map(|i| f64::from(u8::from((i + g) % 3 == 0))).collect()).collect();
        let b = anova_oneway(&binary).unwrap();
        assert_eq!((b.df_between, b.df_within), (3, 1036));

        assert!(anova_oneway(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn statistics_are_non_negative(
            counts in proptest::collection::vec(proptest::collection::vec(1u64..50, 3), 2..5),
            groups in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2..6), 2..5),
        ) {
            let c = chi_square(&ContingencyTable::new(counts)).unwrap();
            prop_assert!(c.stat >= 0.0 && (0.0..=1.0).contains(&c.p));
            let a = anova_oneway(&groups).unwrap();
            prop_assert!(a.f >= 0.0 && (0.0..=1.0).contains(&a.p));
        }
    }
}

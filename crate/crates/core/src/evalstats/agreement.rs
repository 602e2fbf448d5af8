use std::collections::BTreeMap;

use super::EvalError;

/// Cohen's kappa for two label sequences.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::InsufficientData("kappa needs at least one item"));
    }
    let n = a.len() as f64;
    let mut margins: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        margins.entry(x).or_default().0 += 1;
        margins.entry(y).or_default().1 += 1;
        agree += usize::from(x == y);
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = margins.values().map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n)).sum();
    if p_e >= 1.0 {
        return Err(EvalError::DegenerateAgreement);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaLevel {
    Nominal,
    Ordinal,
}

/// Krippendorff's alpha from a coder × unit matrix with missing values.
///
/// Units with fewer than two values are not pairable and are ignored. Ordinal
/// distances follow the value order of `T`.
pub fn krippendorff_alpha<T: Ord + Clone>(
    values: &[Vec<Option<T>>],
    level: AlphaLevel,
) -> Result<f64, EvalError> {
    let units = values.iter().map(Vec::len).max().unwrap_or(0);
    let mut categories: BTreeMap<T, usize> = BTreeMap::new();
    let mut pairable: Vec<Vec<T>> = Vec::new();
    for u in 0..units {
        let present: Vec<T> = values.iter().filter_map(|row| row.get(u).cloned().flatten()).collect();
        if present.len() >= 2 {
            for v in &present {
                let next = categories.len();
                categories.entry(v.clone()).or_insert(next);
            }
            pairable.push(present);
        }
    }
    if pairable.len() < 2 {
        return Err(EvalError::InsufficientData("alpha needs two units with two values each"));
    }
    // Dense indices in value order.
    for (i, slot) in categories.values_mut().enumerate() {
        *slot = i;
    }
    let k = categories.len();
    let mut o = vec![vec![0.0f64; k]; k];
    for unit in &pairable {
        let m = unit.len() as f64;
        let idx: Vec<usize> = unit.iter().map(|v| categories[v]).collect();
        for (i, &c) in idx.iter().enumerate() {
            for (j, &d) in idx.iter().enumerate() {
                if i != j {
                    o[c][d] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let marg: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marg.iter().sum();

    let delta2 = |c: usize, d: usize| -> f64 {
        match level {
            AlphaLevel::Nominal => f64::from(u8::from(c != d)),
            AlphaLevel::Ordinal => {
                let (lo, hi) = (c.min(d), c.max(d));
                let s: f64 = marg[lo..=hi].iter().sum::<f64>() - (marg[lo] + marg[hi]) / 2.0;
                s * s
            }
        }
    };
    let (mut observed, mut expected) = (0.0, 0.0);
    for c in 0..k {
        for d in 0..k {
            let w = delta2(c, d);
            observed += o[c][d] * w;
            expected += marg[c] * marg[d] * w;
        }
    }
    if expected == 0.0 {
        return Err(EvalError::DegenerateAgreement);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

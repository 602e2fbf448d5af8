use crate::rng::SeededRng;

use super::EvalError;

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n - 1) q`). `sorted` must be ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for `statistic` over `data`.
///
/// Resample `b` draws from its own substream `(seed, b)`, so the interval does
/// not depend on evaluation order.
pub fn bootstrap_ci<T: Clone>(
    statistic: impl Fn(&[T]) -> f64,
    data: &[T],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    if data.len() < 2 {
        return Err(EvalError::InsufficientData("bootstrap needs at least 2 observations"));
    }
    if n_resamples == 0 {
        return Err(EvalError::InvalidParameter("n_resamples must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::InvalidParameter("level must lie in (0, 1)"));
    }
    let mut stats: Vec<f64> = (0..n_resamples)
        .map(|b| {
            let mut rng = SeededRng::substream(seed, b as u64);
            let sample: Vec<T> = (0..data.len()).map(|_| data[rng.below(data.len())].clone()).collect();
            statistic(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_type7(&stats, tail), quantile_type7(&stats, 1.0 - tail)))
}

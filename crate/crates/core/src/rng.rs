//! Seeded randomness shared by splits, bootstrap resampling, model init and sampling.
//!
//! Everything runs on 64-bit SplitMix. Derived quantities (bounded indices,
//! unit floats, shuffles) are computed here with fixed formulas, so a given
//! seed yields the same stream in any implementation that follows them.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: SplitMix64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Independent stream for the `index`-th unit of work under `seed`.
    ///
    /// With `first(s)` the first SplitMix output for state `s`, the substream
    /// seed is `first(first(seed) + index)`. Hashing `seed` before adding the
    /// index keeps neighbouring seeds from sharing shifted substreams, and work
    /// items can be evaluated in any order without changing results.
    pub fn substream(seed: u64, index: u64) -> Self {
        let first = |s: u64| SplitMix64::seed_from_u64(s).next_u64();
        Self::new(first(first(seed).wrapping_add(index)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound` via the 128-bit multiply-shift map.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        ((u128::from(self.next_u64()) * bound as u128) >> 64) as usize
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit_f64();
        let u2 = self.unit_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A seeded permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        self.shuffle(&mut order);
        order
    }

    /// Index drawn from an unnormalized categorical distribution.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut dart = self.unit_f64() * total;
        for (i, &w) in weights.iter().enumerate() {
            dart -= w;
            if dart < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }
}

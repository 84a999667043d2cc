//! Monte Carlo helpers with worker-count-independent results.
//!
//! Trial `t` always uses the child seed `("trial", t)` of the master context.
//! Trials are grouped into fixed blocks; each block is summed sequentially in
//! trial order and block sums are combined in block order, so the floating
//! point result does not depend on how rayon schedules the blocks.

use rayon::prelude::*;

use crate::seed::SeedContext;

/// Trials per block.
pub const BLOCK: u64 = 512;

/// Child seed of trial `t`.
#[inline]
pub fn trial_seed(master: &SeedContext, t: u64) -> SeedContext {
    master.child("trial", t as i64)
}

/// Per-coordinate first and second moment sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub trials: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Moments {
    fn zero(width: usize) -> Self {
        Self {
            trials: 0,
            sum: vec![0.0; width],
            sum_sq: vec![0.0; width],
        }
    }

    fn absorb(&mut self, other: &Moments) {
        self.trials += other.trials;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    /// Sample mean of coordinate `k`.
    pub fn mean(&self, k: usize) -> f64 {
        self.sum[k] / self.trials as f64
    }

    /// Unbiased sample variance of coordinate `k`.
    pub fn variance(&self, k: usize) -> f64 {
        let n = self.trials as f64;
        if self.trials < 2 {
            return 0.0;
        }
        let m = self.mean(k);
        ((self.sum_sq[k] - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean of coordinate `k`.
    pub fn stderr(&self, k: usize) -> f64 {
        (self.variance(k) / self.trials as f64).sqrt()
    }
}

/// Runs `trials` trials; trial `t` writes `width` observations into the
/// scratch slice given to `f(t, seed_t, out)`.
pub fn trial_moments<F>(master: &SeedContext, trials: u64, width: usize, f: F) -> Moments
where
    F: Fn(u64, &SeedContext, &mut [f64]) + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Moments::zero(width);
            let mut out = vec![0.0; width];
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                out.iter_mut().for_each(|v| *v = 0.0);
                f(t, &trial_seed(master, t), &mut out);
                acc.trials += 1;
                for k in 0..width {
                    acc.sum[k] += out[k];
                    acc.sum_sq[k] += out[k] * out[k];
                }
            }
            acc
        })
        .collect();
    let mut total = Moments::zero(width);
    parts.iter().for_each(|p| total.absorb(p));
    total
}

/// Histogram of `f(t, seed_t)` over `trials` trials; outputs must be below
/// `size`.
pub fn trial_counts<F>(master: &SeedContext, trials: u64, size: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, &SeedContext) -> usize + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut c = vec![0u64; size];
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                c[f(t, &trial_seed(master, t))] += 1;
            }
            c
        })
        .collect();
    let mut total = vec![0u64; size];
    for p in parts {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    total
}

/// Total variation between an empirical histogram and a probability vector.
pub fn empirical_tv(counts: &[u64], mass: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(mass)
        .map(|(&c, &m)| (c as f64 / n as f64 - m).abs())
        .sum::<f64>()
}

//! Shared strategies and helpers for the integration tests.

#![allow(dead_code)]

use pairwise_ot::{CostSpace, DiscreteDistribution};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-negative weights of length `len` with at least one positive entry;
/// roughly a third of the entries are zero.
pub fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 2 => 0.05f64..1.0], len).prop_map(|mut w| {
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        w
    })
}

/// Distinct points of the plane, `len` of them, with coordinates in
/// `[0, 10)`; a per-index offset keeps them apart.
pub fn plane_points(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), len).prop_map(|pts| {
        pts.into_iter()
            .enumerate()
            .map(|(i, (x, y))| (x + 0.137 * i as f64, y))
            .collect()
    })
}

/// Euclidean distance matrix of plane points.
pub fn euclidean_rows(pts: &[(f64, f64)]) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
        .collect()
}

/// A Euclidean plane space with `len` points and cost exponent `q`.
pub fn plane_space(len: usize, q: f64) -> impl Strategy<Value = CostSpace> {
    plane_points(len).prop_map(move |pts| CostSpace::explicit(&euclidean_rows(&pts), q, true).unwrap())
}

/// A space together with `count` distributions on it.
pub fn space_with_dists(
    space: impl Strategy<Value = CostSpace>,
    count: usize,
) -> impl Strategy<Value = (CostSpace, Vec<DiscreteDistribution>)> {
    space.prop_flat_map(move |s| {
        let len = s.len();
        (Just(s), prop::collection::vec(weights(len), count))
    })
    .prop_map(|(s, ws)| {
        let ds = ws
            .into_iter()
            .map(|w| DiscreteDistribution::from_weights(&s, w).unwrap())
            .collect();
        (s, ds)
    })
}

/// Random distribution on `space` whose support has at most `max_support`
/// points.
pub fn random_dist(rng: &mut ChaCha8Rng, space: &CostSpace, max_support: usize) -> DiscreteDistribution {
    let k = rng.random_range(1..=max_support.min(space.len()));
    let mut w = vec![0.0; space.len()];
    for x in sample(rng, space.len(), k) {
        w[x] = rng.random_range(0.05..1.0);
    }
    DiscreteDistribution::from_weights(space, w).unwrap()
}

/// Random distribution supported on `points`.
pub fn random_dist_on(rng: &mut ChaCha8Rng, space: &CostSpace, points: &[usize]) -> DiscreteDistribution {
    let mut w = vec![0.0; space.len()];
    for &x in points {
        w[x] = rng.random_range(0.05..1.0);
    }
    DiscreteDistribution::from_weights(space, w).unwrap()
}

/// Marginal tolerance for `trials` draws on `len` points.
pub fn marginal_tolerance(len: usize, trials: u64) -> f64 {
    0.02f64.max(4.0 * (len as f64 / trials as f64).sqrt())
}

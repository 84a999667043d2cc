//! Monte Carlo estimates of pairwise coupling ratios, lower-bound instances
//! and closed-form bounds.
//!
//! The pairwise ratio of a coupling is the largest `E[c(X_a, X_b)] / C*(P_a, P_b)`
//! over pairs of the collection. The estimators report every pair with its
//! standard error so that callers can compare against a bound at a chosen
//! number of standard errors.

pub mod bounds;
pub mod instances;

pub use bounds::{ball_volume, bound_calculator, BoundKind, BoundParams};
pub use instances::{cycle_instance, grid_boundary_walk, mixture_instance, Instance};

use serde::{Deserialize, Serialize};

use crate::couplings::Coupling;
use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::mc::trial_moments;
use crate::oracle::emd_exact;
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// Smallest number of trials accepted by the estimators.
pub const MIN_TRIALS: u64 = 100;

/// `C*` values at or below this are treated as zero.
pub const ZERO_COST: f64 = 1e-14;

/// Estimate for one unordered pair of the collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub a: usize,
    pub b: usize,
    /// Mean of the per-trial value: the cost, or the truncated normalized
    /// cost for truncated estimates.
    pub mean: f64,
    pub stderr: f64,
    pub c_star: f64,
    /// `mean / C*`, or the truncated mean itself. `None` marks a pair with
    /// `C* = 0` and zero observed cost, which carries no information;
    /// infinity marks `C* = 0` with positive observed cost.
    pub ratio: Option<f64>,
    pub ratio_stderr: f64,
}

/// Pairwise ratio estimate of a coupling on a collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub trials: u64,
    /// Truncation level for truncated estimates.
    pub truncation: Option<f64>,
    pub pairs: Vec<PairEstimate>,
    /// Largest pair ratio, or 1 when no pair is informative.
    pub ratio: f64,
    /// Standard error of the ratio of the maximizing pair.
    pub ratio_stderr: f64,
    /// Index into `pairs` of the maximizing pair.
    pub worst: Option<usize>,
}

impl RatioEstimate {
    /// Pairs where a zero transport cost met a positive observed cost.
    pub fn infinite_pairs(&self) -> impl Iterator<Item = &PairEstimate> {
        self.pairs
            .iter()
            .filter(|p| p.ratio.is_some_and(f64::is_infinite))
    }
}

/// Estimates the pairwise ratio of `coupling` on `collection` with costs
/// from `space`, using `trials` child seeds of `master`.
pub fn estimate_ratio(
    coupling: &Coupling,
    space: &CostSpace,
    collection: &[DiscreteDistribution],
    trials: u64,
    master: &SeedContext,
) -> Result<RatioEstimate> {
    estimate(coupling, space, collection, trials, master, None)
}

/// Estimates the truncated ratio `max E[min{c / C*, eta_t}]`, where
/// `0 / 0 = 1` and `t / 0 = infinity` for `t > 0`.
pub fn estimate_truncated_ratio(
    coupling: &Coupling,
    space: &CostSpace,
    collection: &[DiscreteDistribution],
    eta_t: f64,
    trials: u64,
    master: &SeedContext,
) -> Result<RatioEstimate> {
    if !(eta_t >= 0.0) {
        return Err(invalid("truncate", format!("must be non-negative, got {eta_t}")));
    }
    estimate(coupling, space, collection, trials, master, Some(eta_t))
}

fn estimate(
    coupling: &Coupling,
    space: &CostSpace,
    collection: &[DiscreteDistribution],
    trials: u64,
    master: &SeedContext,
    truncation: Option<f64>,
) -> Result<RatioEstimate> {
    if collection.len() < 2 {
        return Err(Error::CollectionTooSmall {
            needed: 2,
            got: collection.len(),
        });
    }
    if trials < MIN_TRIALS {
        return Err(invalid(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    coupling.validate(collection)?;
    for p in collection {
        p.check_space(space)?;
    }
    let mut pairs = Vec::new();
    for a in 0..collection.len() {
        for b in a + 1..collection.len() {
            let c_star = emd_exact(&collection[a], &collection[b], space)?.value;
            pairs.push((a, b, if c_star <= ZERO_COST { 0.0 } else { c_star }));
        }
    }
    let masses: Vec<&[f64]> = collection.iter().map(|p| p.mass()).collect();
    let moments = trial_moments(master, trials, pairs.len(), |_, seed, out| {
        let h = coupling.sample_masses(&masses, seed);
        for (k, &(a, b, c_star)) in pairs.iter().enumerate() {
            let c = space.cost(h[a], h[b]);
            out[k] = match truncation {
                None => c,
                Some(eta) => truncated(c, c_star, eta),
            };
        }
    });
    let pairs: Vec<PairEstimate> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b, c_star))| {
            let (mean, stderr) = (moments.mean(k), moments.stderr(k));
            let (ratio, ratio_stderr) = match truncation {
                Some(_) => (Some(mean), stderr),
                None if c_star > 0.0 => (Some(mean / c_star), stderr / c_star),
                None if mean == 0.0 => (None, 0.0),
                None => (Some(f64::INFINITY), f64::INFINITY),
            };
            PairEstimate {
                a,
                b,
                mean,
                stderr,
                c_star,
                ratio,
                ratio_stderr,
            }
        })
        .collect();
    let worst = pairs
        .iter()
        .enumerate()
        .filter_map(|(k, p)| p.ratio.map(|r| (k, r)))
        .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
        .map(|(k, _)| k);
    let (ratio, ratio_stderr) = match worst {
        Some(k) => (pairs[k].ratio.expect("worst pair has a ratio"), pairs[k].ratio_stderr),
        None => (1.0, 0.0),
    };
    Ok(RatioEstimate {
        trials,
        truncation,
        pairs,
        ratio,
        ratio_stderr,
        worst,
    })
}

/// `min{c / c_star, eta}` with `0 / 0 = 1` and `t / 0 = infinity`.
fn truncated(c: f64, c_star: f64, eta: f64) -> f64 {
    let r = if c_star > 0.0 {
        c / c_star
    } else if c == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    r.min(eta)
}

/// `(sup c1 / c2) (sup c2 / c1)` over pairs of distinct points, where each
/// supremum runs over pairs with a positive numerator and `a / 0` is
/// infinite. Any coupling ratio for `c2` times this factor bounds the
/// optimal ratio for `c1`.
pub fn ratio_transfer_bound(
    space: &CostSpace,
    c1: impl Fn(usize, usize) -> f64,
    c2: impl Fn(usize, usize) -> f64,
) -> f64 {
    let sup = |num: &dyn Fn(usize, usize) -> f64, den: &dyn Fn(usize, usize) -> f64| {
        let mut best: f64 = 0.0;
        for x in 0..space.len() {
            for y in x + 1..space.len() {
                let (a, b) = (num(x, y), den(x, y));
                if a > 0.0 {
                    best = best.max(if b > 0.0 { a / b } else { f64::INFINITY });
                }
            }
        }
        best
    };
    let (up, down) = (sup(&c1, &c2), sup(&c2, &c1));
    if up.is_infinite() || down.is_infinite() {
        f64::INFINITY
    } else {
        up * down
    }
}

/// Isometric embedding `g` of `(space, c)` into the real line, if one
/// exists.
///
/// With `g(x_0) = 0` and `g(x_1) = c(x_0, x_1)` for the first two points,
/// every other point is placed on the side of `x_0` given by whether
/// `c(x_0, x) + c(x_0, x_1) = c(x_1, x)`; the candidate is then checked on
/// all pairs to relative tolerance `1e-9`.
pub fn line_isometry_test(space: &CostSpace) -> Option<Vec<f64>> {
    let n = space.len();
    if n <= 1 {
        return Some(vec![0.0; n]);
    }
    let scale = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .map(|(x, y)| space.cost(x, y))
        .fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(1.0);
    let c01 = space.cost(0, 1);
    let g: Vec<f64> = (0..n)
        .map(|x| {
            let c0x = space.cost(0, x);
            if (c0x + c01 - space.cost(1, x)).abs() <= tol {
                -c0x
            } else {
                c0x
            }
        })
        .collect();
    let ok = (0..n).all(|x| (x + 1..n).all(|y| ((g[x] - g[y]).abs() - space.cost(x, y)).abs() <= tol));
    ok.then_some(g)
}

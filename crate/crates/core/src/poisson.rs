//! Poisson functional representation on finite spaces with counting base
//! measure, and the Poisson coupling distance.
//!
//! Only the first arrival of each point's Poisson process matters for the
//! argmin, so a race is a vector of Exp(1) times `V_x` and the selected point
//! is `argmin_x V_x / P(x)` over the support of `P`.

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::mc::{trial_moments, Moments};
use crate::seed::{RaceSource, SeedContext};

/// Winner of an exponential race and its score `V_x / P(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceOutcome {
    pub winner: usize,
    pub winning_score: f64,
}

/// `argmin_x V_x / w_x` over `w_x > 0`, ties to the lowest index.
///
/// `w` need not be normalized. Returns `None` when `w` has no positive entry.
#[inline]
pub fn race_argmin(w: &[f64], race: impl Fn(usize) -> f64) -> Option<RaceOutcome> {
    let mut best: Option<RaceOutcome> = None;
    for (x, &wx) in w.iter().enumerate() {
        if wx > 0.0 {
            let score = race(x) / wx;
            if best.is_none_or(|b| score < b.winning_score) {
                best = Some(RaceOutcome {
                    winner: x,
                    winning_score: score,
                });
            }
        }
    }
    best
}

/// Poisson functional representation of `p` at `level`.
pub fn pfr_select(p: &DiscreteDistribution, seed: &SeedContext, level: i64) -> RaceOutcome {
    pfr_select_with(p.mass(), seed, level)
}

/// [`pfr_select`] over a raw weight vector and any race source.
pub fn pfr_select_with<R: RaceSource + ?Sized>(w: &[f64], race: &R, level: i64) -> RaceOutcome {
    race_argmin(w, |x| race.race(level, x)).expect("weights have a positive entry")
}

/// `d_PC(P, Q) = 1 - sum_x (sum_y max{P(y)/P(x), Q(y)/Q(x)})^{-1}`, where the
/// outer term is 0 unless both `P(x) > 0` and `Q(x) > 0`.
pub fn dpc_closed_form(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(dpc_slices(p.mass(), q.mass()))
}

/// [`dpc_closed_form`] on raw probability vectors of equal length.
pub fn dpc_slices(p: &[f64], q: &[f64]) -> f64 {
    let union: Vec<usize> = (0..p.len()).filter(|&y| p[y] > 0.0 || q[y] > 0.0).collect();
    let mut agree = 0.0;
    for &x in &union {
        let (px, qx) = (p[x], q[x]);
        if px > 0.0 && qx > 0.0 {
            let inner: f64 = union
                .iter()
                .map(|&y| (p[y] / px).max(q[y] / qx))
                .sum();
            agree += 1.0 / inner;
        }
    }
    (1.0 - agree).clamp(0.0, 1.0)
}

/// Universal Poisson coupling: component `a` is the level-0 PFR of
/// `collection[a]`, all driven by one seed.
pub fn universal_coupling_sample(
    collection: &[DiscreteDistribution],
    seed: &SeedContext,
) -> Result<Vec<usize>> {
    let first = collection.first().ok_or(Error::CollectionTooSmall {
        needed: 1,
        got: 0,
    })?;
    for d in &collection[1..] {
        first.check_same_space(d)?;
    }
    let race: Vec<f64> = (0..first.len()).map(|x| seed.exponential(0, x)).collect();
    Ok(collection
        .iter()
        .map(|d| race_argmin(d.mass(), |x| race[x]).expect("non-empty support").winner)
        .collect())
}

/// Monte Carlo estimate of `P(pfr(P) != pfr(Q))` over `trials` child seeds.
pub fn dpc_empirical(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    trials: u64,
    master: &SeedContext,
) -> Result<Moments> {
    p.check_same_space(q)?;
    let (pm, qm) = (p.mass(), q.mass());
    let len = pm.len();
    Ok(trial_moments(master, trials, 1, |_, seed, out| {
        let mut bp: Option<(usize, f64)> = None;
        let mut bq: Option<(usize, f64)> = None;
        for x in 0..len {
            if pm[x] > 0.0 || qm[x] > 0.0 {
                let v = seed.exponential(0, x);
                if pm[x] > 0.0 && bp.is_none_or(|b| v / pm[x] < b.1) {
                    bp = Some((x, v / pm[x]));
                }
                if qm[x] > 0.0 && bq.is_none_or(|b| v / qm[x] < b.1) {
                    bq = Some((x, v / qm[x]));
                }
            }
        }
        out[0] = (bp.map(|b| b.0) != bq.map(|b| b.0)) as u8 as f64;
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::trial_counts;
    use crate::oracle::tv_distance;
    use crate::space::CostSpace;

    fn space(n: usize) -> CostSpace {
        CostSpace::discrete(n, 1.0).unwrap()
    }

    #[test]
    fn point_mass_always_wins() {
        let s = space(4);
        let d = DiscreteDistribution::point_mass(&s, 2).unwrap();
        for t in 0..100 {
            assert_eq!(pfr_select(&d, &SeedContext::new(t), 0).winner, 2);
        }
    }

    #[test]
    fn select_is_deterministic() {
        let s = space(3);
        let d = DiscreteDistribution::from_weights(&s, vec![1.0, 2.0, 3.0]).unwrap();
        let seed = SeedContext::new(11);
        assert_eq!(pfr_select(&d, &seed, 4), pfr_select(&d, &seed, 4));
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let out = race_argmin(&[0.5, 0.5], |_| 1.0).unwrap();
        assert_eq!(out.winner, 0);
    }

    #[test]
    fn fair_coin_frequencies() {
        let s = space(2);
        let d = DiscreteDistribution::from_weights(&s, vec![1.0, 1.0]).unwrap();
        let n = 100_000u64;
        let counts = trial_counts(&SeedContext::new(3), n, 2, |_, seed| {
            pfr_select(&d, seed, 0).winner
        });
        let sigma = (0.25 / n as f64).sqrt();
        assert!((counts[0] as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn dpc_examples() {
        let s = space(2);
        let p = DiscreteDistribution::new(&s, vec![0.7, 0.3]).unwrap();
        let q = DiscreteDistribution::new(&s, vec![0.4, 0.6]).unwrap();
        assert!((dpc_closed_form(&p, &q).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(dpc_closed_form(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn dpc_uniform_vs_point_mass_matches_hand_value() {
        // Only x = 0 is shared; inner sum = max{1,1} + 2 * max{1, 0} = 3.
        let s = space(3);
        let p = DiscreteDistribution::uniform_on(&s, &[0, 1, 2]).unwrap();
        let q = DiscreteDistribution::point_mass(&s, 0).unwrap();
        let v = dpc_closed_form(&p, &q).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert!(v >= tv_distance(&p, &q).unwrap() - 1e-15);
    }

    #[test]
    fn universal_sample_trivial_collections() {
        let s = space(5);
        let p = DiscreteDistribution::from_weights(&s, vec![1.0, 2.0, 0.0, 1.0, 1.0]).unwrap();
        let a = DiscreteDistribution::point_mass(&s, 1).unwrap();
        let b = DiscreteDistribution::point_mass(&s, 4).unwrap();
        for t in 0..50 {
            let seed = SeedContext::new(t);
            let xs = universal_coupling_sample(&[p.clone(), p.clone()], &seed).unwrap();
            assert_eq!(xs[0], xs[1]);
            let ys = universal_coupling_sample(&[a.clone(), b.clone()], &seed).unwrap();
            assert_eq!(ys, vec![1, 4]);
            assert_eq!(xs[0], pfr_select(&p, &seed, 0).winner);
        }
        assert!(universal_coupling_sample(&[], &SeedContext::new(0)).is_err());
    }
}

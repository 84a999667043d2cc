//! Closed-form couplings and a common sampler interface.
//!
//! The quantile coupling inverts each CDF at one shared uniform. The
//! permuted-quantile coupling first relabels the points by a shared uniform
//! random permutation, which suits the discrete metric where the order of
//! the points carries no meaning. The circle coupling rotates the circle by a
//! shared uniform angle and takes the quantile coupling from the rotated
//! origin.
//!
//! [`Coupling`] wraps these together with the Poisson coupling and the two
//! locality sensitive hashes, so that every estimator can drive any of them
//! from one seed per trial.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::poisson::race_argmin;
use crate::seed::SeedContext;
use crate::space::{circle_dist, CostSpace, SpaceKind};
use crate::spfr::schedule::schedule_theta;
use crate::spfr::{build_minimax_ultrametric, MetricLsh, TorusLsh};

/// A point of the circle `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CirclePoint(f64);

impl CirclePoint {
    /// Point at `position`, reduced mod 1.
    pub fn new(position: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(invalid("position", format!("not finite: {position}")));
        }
        Ok(Self(wrap(position)))
    }

    pub fn position(self) -> f64 {
        self.0
    }

    /// `x + t mod 1`.
    pub fn rotate(self, t: f64) -> Self {
        Self(wrap(self.0 + t))
    }

    /// `min{|x - y|, 1 - |x - y|}`.
    pub fn dist(self, other: Self) -> f64 {
        circle_dist(self.0, other.0)
    }
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // `rem_euclid` can round up to exactly 1 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `inf{x : F(x) >= u}` along `order`; the last support point when rounding
/// leaves the cumulative sum short of `u`.
fn quantile_along(order: impl IntoIterator<Item = usize>, mass: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = usize::MAX;
    for x in order {
        if mass[x] > 0.0 {
            acc += mass[x];
            last = x;
            if acc >= u {
                return x;
            }
        }
    }
    debug_assert!(last != usize::MAX, "mass has a positive entry");
    last
}

/// Quantile coupling on an ordered space: `F^{-1}(u)` with `u` drawn from
/// the `"u"` stream of `seed`.
pub fn quantile_sample(
    p: &DiscreteDistribution,
    space: &CostSpace,
    seed: &SeedContext,
) -> Result<usize> {
    p.check_space(space)?;
    let order = space.ordered_points()?;
    Ok(quantile_along(order, p.mass(), seed.tag("u").uniform()))
}

/// Uniform random permutation of `0..len` by Fisher-Yates, driven by the
/// `("perm", k)` streams of `seed`. Entry `r` is the point ranked `r`.
pub fn seeded_permutation(len: usize, seed: &SeedContext) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    for k in (1..len).rev() {
        let u = seed.child("perm", k as i64).uniform();
        let j = ((u * (k + 1) as f64) as usize).min(k);
        perm.swap(k, j);
    }
    perm
}

/// Permuted-quantile coupling: the quantile coupling after relabelling the
/// points by [`seeded_permutation`].
pub fn permuted_quantile_sample(p: &DiscreteDistribution, seed: &SeedContext) -> usize {
    let perm = seeded_permutation(p.len(), seed);
    quantile_along(perm, p.mass(), seed.tag("u").uniform())
}

/// Circle coupling of `p` on a circle space; the rotation `Z` and the
/// uniform `U` come from the `"rot"` and `"u"` streams of `seed`.
pub fn circle_sample(
    p: &DiscreteDistribution,
    space: &CostSpace,
    seed: &SeedContext,
) -> Result<CirclePoint> {
    let x = circle_sample_index(p, space, seed)?;
    CirclePoint::new(space.positions().expect("circle space has positions")[x])
}

/// Index of the point chosen by [`circle_sample`].
pub fn circle_sample_index(
    p: &DiscreteDistribution,
    space: &CostSpace,
    seed: &SeedContext,
) -> Result<usize> {
    p.check_space(space)?;
    if space.kind() != SpaceKind::Circle {
        return Err(Error::UnsupportedSpace {
            op: "circle_sample",
            kind: space.kind().name(),
        });
    }
    let pos = space.positions().expect("circle space has positions");
    let z = seed.tag("rot").uniform();
    let u = seed.tag("u").uniform();
    Ok(circle_sample_with(pos, p.mass(), z, u))
}

/// Circle coupling for an explicit rotation `z` and uniform `u`: rotate the
/// support by `z`, take the quantile at `u` from the origin, and return the
/// index of the chosen point (rotating back is the identity on indices).
pub fn circle_sample_with(positions: &[f64], mass: &[f64], z: f64, u: f64) -> usize {
    let mut order: Vec<(f64, usize)> = (0..positions.len())
        .filter(|&x| mass[x] > 0.0)
        .map(|x| (wrap(positions[x] + z), x))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    quantile_along(order.into_iter().map(|(_, x)| x), mass, u)
}

/// Name of a coupling construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Universal Poisson coupling.
    Poisson,
    /// Locality sensitive hash for finite metric spaces.
    Metric,
    /// The metric hash run on the minimax-path ultrametric.
    Ultrametric,
    /// Locality sensitive hash for the discrete torus.
    Torus,
    /// Quantile coupling on an ordered space.
    Quantile,
    /// Quantile coupling after a shared random relabelling.
    Permuted,
    /// Rotation coupling on the circle.
    Circle,
}

impl Algo {
    pub const ALL: [Algo; 7] = [
        Algo::Poisson,
        Algo::Metric,
        Algo::Ultrametric,
        Algo::Torus,
        Algo::Quantile,
        Algo::Permuted,
        Algo::Circle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Poisson => "poisson",
            Algo::Metric => "metric",
            Algo::Ultrametric => "ultrametric",
            Algo::Torus => "torus",
            Algo::Quantile => "quantile",
            Algo::Permuted => "permuted",
            Algo::Circle => "circle",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid("algo", format!("unknown coupling `{s}`")))
    }
}

/// Tuning knobs shared by the hash-based couplings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingOptions {
    /// Geometric rate; the construction's default when absent.
    pub eta: Option<f64>,
    /// Reduced level set for the metric hashes.
    pub reduced: bool,
    /// Kernel quadrature resolution for the torus hash.
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone)]
enum Sampler {
    Poisson,
    Metric(MetricLsh),
    Torus(Box<TorusLsh>),
    Quantile(Vec<usize>),
    Permuted,
    Circle(Vec<f64>),
}

/// A coupling of all distributions on one space, evaluated one seed at a
/// time.
#[derive(Debug, Clone)]
pub struct Coupling {
    algo: Algo,
    len: usize,
    fingerprint: u64,
    sampler: Sampler,
}

impl Coupling {
    /// Coupling `algo` on `space` with default options.
    pub fn new(algo: Algo, space: &CostSpace) -> Result<Self> {
        Self::with_options(algo, space, CouplingOptions::default())
    }

    pub fn with_options(algo: Algo, space: &CostSpace, opts: CouplingOptions) -> Result<Self> {
        let unsupported = || Error::UnsupportedSpace {
            op: algo.name(),
            kind: space.kind().name(),
        };
        let metric_lsh = |s: &CostSpace| -> Result<MetricLsh> {
            let lsh = MetricLsh::new(s).with_reduced(opts.reduced);
            match opts.eta {
                Some(eta) => lsh.with_eta(eta),
                None => Ok(lsh),
            }
        };
        let sampler = match algo {
            Algo::Poisson => Sampler::Poisson,
            Algo::Metric => {
                if !space.is_metric() {
                    return Err(unsupported());
                }
                Sampler::Metric(metric_lsh(space)?)
            }
            Algo::Ultrametric => {
                if !space.is_metric() {
                    return Err(unsupported());
                }
                Sampler::Metric(metric_lsh(&build_minimax_ultrametric(space)?)?)
            }
            Algo::Torus => {
                if space.kind() != SpaceKind::LpTorus {
                    return Err(unsupported());
                }
                let lsh = match opts.eta {
                    Some(eta) => TorusLsh::with_eta(space, eta)?,
                    None => TorusLsh::new(space)?,
                };
                let lsh = match opts.resolution {
                    Some(r) => lsh.with_resolution(r)?,
                    None => lsh,
                };
                Sampler::Torus(Box::new(lsh))
            }
            Algo::Quantile => Sampler::Quantile(space.ordered_points()?),
            Algo::Permuted => Sampler::Permuted,
            Algo::Circle => Sampler::Circle(
                space
                    .positions()
                    .filter(|_| space.kind() == SpaceKind::Circle)
                    .ok_or_else(unsupported)?
                    .to_vec(),
            ),
        };
        Ok(Self {
            algo,
            len: space.len(),
            fingerprint: space.fingerprint(),
            sampler,
        })
    }

    pub fn algo(&self) -> Algo {
        self.algo
    }

    /// Checks that every distribution lives on this coupling's space and,
    /// for the torus, on the embedded grid.
    pub fn validate(&self, collection: &[DiscreteDistribution]) -> Result<()> {
        for p in collection {
            if p.space_fingerprint() != self.fingerprint || p.len() != self.len {
                return Err(Error::SpaceMismatch {
                    left: p.len(),
                    right: self.len,
                });
            }
            if let Sampler::Torus(lsh) = &self.sampler {
                lsh.check(p)?;
            }
        }
        Ok(())
    }

    /// Coupled samples of validated collection `collection` under `seed`.
    pub fn sample(
        &self,
        collection: &[DiscreteDistribution],
        seed: &SeedContext,
    ) -> Result<Vec<usize>> {
        self.validate(collection)?;
        let masses: Vec<&[f64]> = collection.iter().map(|p| p.mass()).collect();
        Ok(self.sample_masses(&masses, seed))
    }

    /// Coupled samples of probability vectors, without validation.
    pub fn sample_masses(&self, masses: &[&[f64]], seed: &SeedContext) -> Vec<usize> {
        match &self.sampler {
            Sampler::Poisson => {
                let race: Vec<f64> = (0..self.len).map(|x| seed.exponential(0, x)).collect();
                masses
                    .iter()
                    .map(|m| race_argmin(m, |x| race[x]).expect("non-empty support").winner)
                    .collect()
            }
            Sampler::Metric(lsh) => lsh.hash_many(masses, seed),
            Sampler::Torus(lsh) => lsh.hash_masses_with(masses, schedule_theta(seed), seed),
            Sampler::Quantile(order) => {
                let u = seed.tag("u").uniform();
                masses
                    .iter()
                    .map(|m| quantile_along(order.iter().copied(), m, u))
                    .collect()
            }
            Sampler::Permuted => {
                let perm = seeded_permutation(self.len, seed);
                let u = seed.tag("u").uniform();
                masses
                    .iter()
                    .map(|m| quantile_along(perm.iter().copied(), m, u))
                    .collect()
            }
            Sampler::Circle(pos) => {
                let z = seed.tag("rot").uniform();
                let u = seed.tag("u").uniform();
                masses.iter().map(|m| circle_sample_with(pos, m, z, u)).collect()
            }
        }
    }

    /// Sample of a single distribution.
    pub fn sample_one(&self, p: &DiscreteDistribution, seed: &SeedContext) -> Result<usize> {
        Ok(self.sample(std::slice::from_ref(p), seed)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_the_cdf() {
        let s = CostSpace::line(&[0.0, 1.0], 1.0).unwrap();
        let p = DiscreteDistribution::new(&s, vec![0.5, 0.5]).unwrap();
        assert_eq!(quantile_along([0, 1], p.mass(), 0.5), 0);
        assert_eq!(quantile_along([0, 1], p.mass(), 0.5000001), 1);
        assert_eq!(quantile_along([0, 1], p.mass(), 1.0), 1);
        for t in 0..50 {
            let seed = SeedContext::new(t);
            let x = quantile_sample(&p, &s, &seed).unwrap();
            assert_eq!(x, (seed.tag("u").uniform() > 0.5) as usize);
        }
    }

    #[test]
    fn quantile_short_sum_returns_last_support_point() {
        assert_eq!(quantile_along([0, 1, 2], &[0.3, 0.3, 0.0], 0.9), 1);
    }

    #[test]
    fn permutation_is_a_bijection() {
        for t in 0..100 {
            let mut perm = seeded_permutation(9, &SeedContext::new(t));
            perm.sort_unstable();
            assert_eq!(perm, (0..9).collect::<Vec<_>>());
        }
    }

    #[test]
    fn point_masses_are_fixed() {
        let line = CostSpace::line(&[0.0, 2.0, 3.0], 1.0).unwrap();
        let circle = CostSpace::circle(&[0.1, 0.5, 0.7], 1.0).unwrap();
        for t in 0..100 {
            let seed = SeedContext::new(t);
            let d = DiscreteDistribution::point_mass(&line, 2).unwrap();
            assert_eq!(quantile_sample(&d, &line, &seed).unwrap(), 2);
            assert_eq!(permuted_quantile_sample(&d, &seed), 2);
            let c = DiscreteDistribution::point_mass(&circle, 1).unwrap();
            assert_eq!(circle_sample(&c, &circle, &seed).unwrap().position(), 0.5);
        }
    }

    #[test]
    fn rotation_origin_sets_the_cdf_start() {
        let pos = [0.1, 0.6];
        let mass = [0.5, 0.5];
        // Rotating by 0.5 puts point 1 at 0.1 and point 0 at 0.6.
        assert_eq!(circle_sample_with(&pos, &mass, 0.5, 0.25), 1);
        assert_eq!(circle_sample_with(&pos, &mass, 0.0, 0.25), 0);
    }

    #[test]
    fn circle_point_wraps() {
        let a = CirclePoint::new(1.25).unwrap();
        assert_eq!(a.position(), 0.25);
        assert_eq!(a.rotate(0.875).position(), 0.125);
        assert_eq!(a.dist(CirclePoint::new(0.875).unwrap()), 0.375);
        assert!(CirclePoint::new(f64::NAN).is_err());
        assert!(CirclePoint::new(-1e-300).unwrap().position() < 1.0);
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("nope".parse::<Algo>().is_err());
    }

    #[test]
    fn unsupported_spaces_are_rejected() {
        let disc = CostSpace::discrete(4, 1.0).unwrap();
        assert!(Coupling::new(Algo::Torus, &disc).is_err());
        assert!(Coupling::new(Algo::Circle, &disc).is_err());
        let circle = CostSpace::equispaced_circle(4, 1.0).unwrap();
        assert!(Coupling::new(Algo::Quantile, &circle).is_err());
        assert!(Coupling::new(Algo::Metric, &circle).is_ok());
    }

    #[test]
    fn coupling_matches_free_functions() {
        let line = CostSpace::line(&[0.0, 1.0, 3.0, 4.0], 1.0).unwrap();
        let p = DiscreteDistribution::from_weights(&line, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        let quant = Coupling::new(Algo::Quantile, &line).unwrap();
        let perm = Coupling::new(Algo::Permuted, &line).unwrap();
        for t in 0..100 {
            let seed = SeedContext::new(t);
            assert_eq!(quant.sample_one(&p, &seed).unwrap(), quantile_sample(&p, &line, &seed).unwrap());
            assert_eq!(perm.sample_one(&p, &seed).unwrap(), permuted_quantile_sample(&p, &seed));
        }
    }

    #[test]
    fn foreign_distribution_is_rejected() {
        let a = CostSpace::discrete(3, 1.0).unwrap();
        let b = CostSpace::line(&[0.0, 1.0, 2.0], 1.0).unwrap();
        let p = DiscreteDistribution::point_mass(&b, 0).unwrap();
        let c = Coupling::new(Algo::Poisson, &a).unwrap();
        assert!(matches!(c.validate(&[p]), Err(Error::SpaceMismatch { .. })));
    }
}

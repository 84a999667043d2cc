//! Sketches for estimating transport costs.
//!
//! Entry `i` of the sketch of `P` is the coupled sample of `P` under the
//! child seed `("sketch", i)`. Two sketches made with the same seed and
//! length estimate `E[c(X_P, X_Q)]`, which lies between `C*(P, Q)` and the
//! coupling's ratio times `C*(P, Q)`.

use serde::{Deserialize, Serialize};

use crate::couplings::{Algo, Coupling};
use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// `k` coupled samples of one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub k: usize,
    pub points: Vec<usize>,
    pub master_seed: u64,
    pub algo: Algo,
}

impl Sketch {
    /// Whether `self` and `other` were drawn with the same seeds.
    pub fn comparable(&self, other: &Sketch) -> bool {
        self.k == other.k
            && self.master_seed == other.master_seed
            && self.algo == other.algo
    }
}

/// Sketch of `p` of length `k` under `master`.
pub fn make_sketch(
    coupling: &Coupling,
    p: &DiscreteDistribution,
    k: usize,
    master_seed: u64,
) -> Result<Sketch> {
    if k == 0 {
        return Err(invalid("k", "a sketch needs at least one entry"));
    }
    coupling.validate(std::slice::from_ref(p))?;
    let master = SeedContext::new(master_seed);
    let mass = [p.mass()];
    let points = (0..k)
        .map(|i| coupling.sample_masses(&mass, &master.child("sketch", i as i64))[0])
        .collect();
    Ok(Sketch {
        k,
        points,
        master_seed,
        algo: coupling.algo(),
    })
}

/// `(1/k) sum_i c(a_i, b_i)`.
pub fn sketch_estimate(a: &Sketch, b: &Sketch, space: &CostSpace) -> Result<f64> {
    if !a.comparable(b) {
        return Err(Error::IncomparableSketches(format!(
            "(k = {}, seed = {}, algo = {}) vs (k = {}, seed = {}, algo = {})",
            a.k, a.master_seed, a.algo, b.k, b.master_seed, b.algo
        )));
    }
    if let Some(&x) = a.points.iter().chain(&b.points).find(|&&x| x >= space.len()) {
        return Err(Error::IncomparableSketches(format!(
            "point {x} is outside a space of {} points",
            space.len()
        )));
    }
    let total: f64 = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(&x, &y)| space.cost(x, y))
        .sum();
    Ok(total / a.k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_sketch() {
        let s = CostSpace::discrete(4, 1.0).unwrap();
        let c = Coupling::new(Algo::Metric, &s).unwrap();
        let p = DiscreteDistribution::point_mass(&s, 2).unwrap();
        let sk = make_sketch(&c, &p, 16, 5).unwrap();
        assert_eq!(sk.points, vec![2; 16]);
        assert!(make_sketch(&c, &p, 0, 5).is_err());
    }

    #[test]
    fn estimates_of_point_masses_are_exact() {
        let s = CostSpace::line(&[0.0, 1.5, 4.0], 1.0).unwrap();
        let c = Coupling::new(Algo::Quantile, &s).unwrap();
        let seed = 1;
        let a = make_sketch(&c, &DiscreteDistribution::point_mass(&s, 0).unwrap(), 8, seed).unwrap();
        let b = make_sketch(&c, &DiscreteDistribution::point_mass(&s, 2).unwrap(), 8, seed).unwrap();
        assert_eq!(sketch_estimate(&a, &b, &s).unwrap(), 4.0);
        assert_eq!(sketch_estimate(&a, &a, &s).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_sketches_are_rejected() {
        let s = CostSpace::discrete(3, 1.0).unwrap();
        let c = Coupling::new(Algo::Poisson, &s).unwrap();
        let p = DiscreteDistribution::point_mass(&s, 0).unwrap();
        let a = make_sketch(&c, &p, 4, 1).unwrap();
        let b = make_sketch(&c, &p, 4, 2).unwrap();
        let d = make_sketch(&c, &p, 5, 1).unwrap();
        assert!(matches!(sketch_estimate(&a, &b, &s), Err(Error::IncomparableSketches(_))));
        assert!(sketch_estimate(&a, &d, &s).is_err());
    }
}

//! Sequential Poisson functional representation over finite chains of
//! ball kernels.
//!
//! Given `X ~ P` and observations `Z_i | X ~ K_i(X, .)` that are
//! conditionally independent across levels, the chain draws each `Z_i` from
//! its predictive law given the earlier observations, using the exponential
//! race of level `i`. The hash of `P` is the last observation once the
//! kernel has become the identity.

pub mod metric;
pub mod schedule;
pub mod torus;
pub mod ultrametric;

pub use metric::{lsh_finite_metric, MetricLsh};
pub use schedule::{make_schedule, ScaleSchedule, DEFAULT_ETA};
pub use torus::{lsh_torus, torus_kernel, TorusKernel, TorusLsh};
pub use ultrametric::build_minimax_ultrametric;

use crate::error::{invalid, Result};
use crate::poisson::race_argmin;
use crate::seed::RaceSource;
use crate::space::CostSpace;

/// Dense row-stochastic kernel on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct BallKernel {
    len: usize,
    weights: Vec<f64>,
}

impl BallKernel {
    /// Uniform distribution over the closed ball `{y : c(x, y) <= w}` around
    /// each point `x`.
    pub fn metric(space: &CostSpace, w: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(invalid("w", format!("radius must be positive, got {w}")));
        }
        let len = space.len();
        let mut weights = vec![0.0; len * len];
        for x in 0..len {
            let row = &mut weights[x * len..(x + 1) * len];
            let mut count = 0usize;
            for (y, v) in row.iter_mut().enumerate() {
                if space.cost(x, y) <= w {
                    *v = 1.0;
                    count += 1;
                }
            }
            row.iter_mut().for_each(|v| *v /= count as f64);
        }
        Ok(Self { len, weights })
    }

    /// Kernel from explicit row-major weights; every row must be a
    /// probability vector.
    pub fn from_rows(len: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != len * len {
            return Err(invalid("weights", "expected a square matrix"));
        }
        for (x, row) in weights.chunks(len.max(1)).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > 1e-9 {
                return Err(invalid("weights", format!("row {x} is not a probability vector")));
            }
        }
        Ok(Self { len, weights })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Row of source point `x`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.weights[x * self.len..(x + 1) * self.len]
    }

    /// `K(x, y)`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[x * self.len + y]
    }
}

/// Runs the chain of `(level, kernel)` pairs on `p` and returns the
/// observation drawn at every level.
pub fn spfr_chain<R: RaceSource + ?Sized>(
    p: &[f64],
    kernels: &[(i64, &BallKernel)],
    race: &R,
) -> Vec<usize> {
    let n = p.len();
    let mut post = p.to_vec();
    let mut pred = vec![0.0; n];
    let mut out = Vec::with_capacity(kernels.len());
    for &(level, k) in kernels {
        pred.iter_mut().for_each(|v| *v = 0.0);
        for (x, &px) in post.iter().enumerate() {
            if px > 0.0 {
                for (v, &kxy) in pred.iter_mut().zip(k.row(x)) {
                    *v += px * kxy;
                }
            }
        }
        let z = race_argmin(&pred, |x| race.race(level, x))
            .expect("the predictive law has positive mass")
            .winner;
        let mut total = 0.0;
        for (x, v) in post.iter_mut().enumerate() {
            *v *= k.get(x, z);
            total += *v;
        }
        post.iter_mut().for_each(|v| *v /= total);
        out.push(z);
    }
    out
}

/// Joint law of the first `kernels.len()` observations, by enumeration of
/// all observation tuples. Tuple `(z_0, .., z_{m-1})` sits at index
/// `sum z_j n^{m-1-j}`.
pub fn chain_joint_law(p: &[f64], kernels: &[&BallKernel]) -> Vec<f64> {
    let n = p.len();
    let m = kernels.len();
    let total = n.pow(m as u32);
    let mut law = vec![0.0; total];
    let mut z = vec![0usize; m];
    for (idx, slot) in law.iter_mut().enumerate() {
        let mut r = idx;
        for j in (0..m).rev() {
            z[j] = r % n;
            r /= n;
        }
        *slot = p
            .iter()
            .enumerate()
            .filter(|(_, &px)| px > 0.0)
            .map(|(x, &px)| px * kernels.iter().zip(&z).map(|(k, &zj)| k.get(x, zj)).product::<f64>())
            .sum();
    }
    law
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedContext;

    #[test]
    fn metric_kernel_rows_are_uniform_on_balls() {
        let s = CostSpace::line(&[0.0, 1.0, 2.5], 1.0).unwrap();
        let k = BallKernel::metric(&s, 1.2).unwrap();
        assert_eq!(k.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(k.row(2), &[0.0, 0.0, 1.0]);
        assert!(BallKernel::metric(&s, 0.0).is_err());
    }

    #[test]
    fn joint_law_sums_to_one() {
        let s = CostSpace::discrete(3, 1.0).unwrap();
        let k1 = BallKernel::metric(&s, 1.5).unwrap();
        let k2 = BallKernel::metric(&s, 0.5).unwrap();
        let law = chain_joint_law(&[0.2, 0.3, 0.5], &[&k1, &k2]);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // The second kernel is the identity, so Z_1 has law P.
        let second: Vec<f64> = (0..3).map(|z| (0..3).map(|a| law[a * 3 + z]).sum()).collect();
        assert!((second[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chain_ends_in_the_support() {
        let s = CostSpace::discrete(4, 1.0).unwrap();
        let k1 = BallKernel::metric(&s, 2.0).unwrap();
        let k2 = BallKernel::metric(&s, 0.5).unwrap();
        for t in 0..100 {
            let zs = spfr_chain(&[0.5, 0.0, 0.5, 0.0], &[(0, &k1), (1, &k2)], &SeedContext::new(t));
            assert!(zs[1] == 0 || zs[1] == 2);
        }
    }
}

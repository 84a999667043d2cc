//! Locality sensitive hash for finite metric spaces.
//!
//! The hash runs a Bayes filter over `X ~ P` observed through uniform-ball
//! kernels of shrinking radius. `S` is the current candidate set and `p` the
//! posterior on it; at each level the next observation `z` is drawn from the
//! predictive law by the exponential race of that level, and `S` shrinks to
//! the points within the radius of `z`. The hash returns the last point left.

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::poisson::race_argmin;
use crate::seed::{RaceSource, SeedContext};
use crate::space::CostSpace;

use super::schedule::{distinct_costs, schedule_from_distances, schedule_theta, ScaleSchedule, DEFAULT_ETA};

/// Hash of one finite metric space, reusable across distributions and seeds.
#[derive(Debug, Clone)]
pub struct MetricLsh {
    len: usize,
    fingerprint: u64,
    dist: Vec<f64>,
    /// Row `x` lists `(c(x, y), y)` by increasing cost.
    sorted: Vec<Vec<(f64, u32)>>,
    distances: Vec<f64>,
    eta: f64,
    reduced: bool,
}

impl MetricLsh {
    /// Hash over the costs `c = d^q` of `space` with the default rate and
    /// the full schedule. Balls, radii and the schedule are all measured in
    /// `c`, which is itself a metric whenever `q <= 1`.
    pub fn new(space: &CostSpace) -> Self {
        let len = space.len();
        let dist = space.cost_matrix();
        let sorted = (0..len)
            .map(|x| {
                let mut row: Vec<(f64, u32)> =
                    (0..len).map(|y| (dist[x * len + y], y as u32)).collect();
                row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                row
            })
            .collect();
        let distances = if len >= 2 {
            distinct_costs(space)
        } else {
            Vec::new()
        };
        Self {
            len,
            fingerprint: space.fingerprint(),
            dist,
            sorted,
            distances,
            eta: DEFAULT_ETA,
            reduced: false,
        }
    }

    /// Overrides the geometric rate.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("must be positive and finite, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Selects the reduced level set.
    pub fn with_reduced(mut self, reduced: bool) -> Self {
        self.reduced = reduced;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Schedule used for `seed`; `None` for a one-point space.
    pub fn schedule(&self, seed: &SeedContext) -> Option<ScaleSchedule> {
        (self.len >= 2).then(|| {
            schedule_from_distances(&self.distances, self.eta, schedule_theta(seed), self.reduced)
        })
    }

    /// Hash of `p` under `seed`.
    pub fn hash(&self, p: &DiscreteDistribution, seed: &SeedContext) -> Result<usize> {
        if p.space_fingerprint() != self.fingerprint {
            return Err(Error::SpaceMismatch {
                left: p.len(),
                right: self.len,
            });
        }
        Ok(self.hash_mass(p.mass(), seed))
    }

    /// Hash of a probability vector under `seed`.
    pub fn hash_mass(&self, p: &[f64], seed: &SeedContext) -> usize {
        match self.schedule(seed) {
            None => 0,
            Some(sch) => self.hash_with(p, &sch, seed),
        }
    }

    /// Hash of `p` for an explicit schedule and race source.
    pub fn hash_with<R: RaceSource + ?Sized>(
        &self,
        p: &[f64],
        schedule: &ScaleSchedule,
        race: &R,
    ) -> usize {
        let n = self.len;
        if n == 1 {
            return 0;
        }
        let mut in_s = vec![true; n];
        let mut count = n;
        let mut post = p.to_vec();
        let mut size = vec![0usize; n];
        let mut pred = vec![0.0; n];
        for &i in &schedule.levels {
            if count <= 1 {
                break;
            }
            let w = schedule.radius(i);
            for x in 0..n {
                size[x] = self.sorted[x].partition_point(|&(d, _)| d <= w);
            }
            for x in 0..n {
                pred[x] = self.sorted[x][..size[x]]
                    .iter()
                    .filter(|&&(_, y)| in_s[y as usize])
                    .map(|&(_, y)| post[y as usize] / size[y as usize] as f64)
                    .sum();
            }
            let z = race_argmin(&pred, |x| race.race(i, x))
                .expect("the predictive law has positive mass")
                .winner;
            let mut total = 0.0;
            count = 0;
            for x in 0..n {
                if in_s[x] && self.dist[z * n + x] <= w {
                    count += 1;
                    post[x] /= size[x] as f64;
                    total += post[x];
                } else {
                    in_s[x] = false;
                    post[x] = 0.0;
                }
            }
            post.iter_mut().for_each(|v| *v /= total);
        }
        debug_assert_eq!(count, 1, "the last level separates all points");
        in_s.iter().position(|&b| b).expect("candidate set is non-empty")
    }

    /// Hashes of several distributions under one seed.
    pub fn hash_many(&self, ps: &[&[f64]], seed: &SeedContext) -> Vec<usize> {
        match self.schedule(seed) {
            None => vec![0; ps.len()],
            Some(sch) => ps.iter().map(|p| self.hash_with(p, &sch, seed)).collect(),
        }
    }
}

/// Hash of `p` on `space` with the default rate.
pub fn lsh_finite_metric(
    space: &CostSpace,
    p: &DiscreteDistribution,
    seed: &SeedContext,
    reduced: bool,
) -> Result<usize> {
    MetricLsh::new(space).with_reduced(reduced).hash(p, seed)
}

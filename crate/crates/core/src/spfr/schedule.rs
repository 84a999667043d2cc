//! Geometric radius schedules `w_i = e^{-eta (i + theta)}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// Default rate for finite metric spaces.
pub const DEFAULT_ETA: f64 = 1.56;

/// Ascending levels `i` with radii `w_i = e^{-eta (i + theta)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub eta: f64,
    pub theta: f64,
    pub levels: Vec<i64>,
}

impl ScaleSchedule {
    /// Radius at level `i`.
    #[inline]
    pub fn radius(&self, i: i64) -> f64 {
        (-self.eta * (i as f64 + self.theta)).exp()
    }
}

/// Phase `theta` of a seed.
pub fn schedule_theta(seed: &SeedContext) -> f64 {
    // `uniform` lies in (0, 1]; fold 1 onto 0 so that theta is in [0, 1).
    let u = seed.tag("theta").uniform();
    if u >= 1.0 {
        0.0
    } else {
        u
    }
}

/// `(i0, i1)` for distances in `[min_d, max_d]`: the first radius is at
/// least `max_d` and the last is below `min_d` for every phase.
pub fn level_range(eta: f64, min_d: f64, max_d: f64) -> (i64, i64) {
    let i0 = (-max_d.ln() / eta).floor() as i64 - 1;
    let i1 = (-min_d.ln() / eta).floor() as i64 + 1;
    (i0, i1)
}

/// Level whose doubled radius is just below `d`:
/// `floor(-ln(e^{eta theta} d / 2) / eta) + 1`.
#[inline]
pub fn guarantee_level(eta: f64, theta: f64, d: f64) -> i64 {
    (-((eta * theta).exp() * d / 2.0).ln() / eta).floor() as i64 + 1
}

/// Upper bound on the number of reduced levels of an `n`-point space.
pub fn reduced_level_bound(n: usize, eta: f64) -> f64 {
    let n = n as f64;
    n * n.ln() / eta + 2.0 * n - 2.0
}

/// Builds the schedule of `space` for `seed`.
///
/// Radii are compared with the costs `c = d^q`, which equal the distances
/// for `q = 1`. The full schedule is `[i0..i1]`. The reduced schedule keeps
/// only the guarantee levels of the pairwise costs, clamped into `[i0, i1]`.
/// Clamping rather than dropping keeps a level whose radius is below the
/// minimum cost, so the hash still terminates on the reduced schedule.
pub fn make_schedule(
    space: &CostSpace,
    eta: f64,
    seed: &SeedContext,
    reduced: bool,
) -> Result<ScaleSchedule> {
    if space.len() < 2 {
        return Err(invalid("space", "a schedule needs at least two points"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid("eta", format!("must be positive and finite, got {eta}")));
    }
    let theta = schedule_theta(seed);
    let distances = distinct_costs(space);
    Ok(schedule_from_distances(&distances, eta, theta, reduced))
}

/// Sorted distinct positive costs of `space`.
pub fn distinct_costs(space: &CostSpace) -> Vec<f64> {
    let n = space.len();
    let mut ds = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            ds.push(space.cost(i, j));
        }
    }
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    ds
}

pub(crate) fn schedule_from_distances(
    distances: &[f64],
    eta: f64,
    theta: f64,
    reduced: bool,
) -> ScaleSchedule {
    let (min_d, max_d) = (distances[0], distances[distances.len() - 1]);
    let (i0, i1) = level_range(eta, min_d, max_d);
    let levels = if reduced {
        let mut ls: Vec<i64> = distances
            .iter()
            .map(|&d| guarantee_level(eta, theta, d).clamp(i0, i1))
            .collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    } else {
        (i0..=i1).collect()
    };
    ScaleSchedule { eta, theta, levels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_unit_space() {
        let s = CostSpace::discrete(2, 1.0).unwrap();
        let sch = make_schedule(&s, DEFAULT_ETA, &SeedContext::new(1), false).unwrap();
        assert_eq!(sch.levels, vec![-1, 0, 1]);
        assert!(sch.radius(-1) >= 1.0);
        assert!(sch.radius(1) < 1.0);
    }

    #[test]
    fn full_schedule_brackets_distances_for_every_phase() {
        let (i0, i1) = level_range(DEFAULT_ETA, 0.3, 7.0);
        for k in 0..100 {
            let theta = k as f64 / 100.0;
            assert!((-DEFAULT_ETA * (i0 as f64 + theta)).exp() >= 7.0);
            assert!((-DEFAULT_ETA * (i1 as f64 + theta)).exp() < 0.3);
        }
    }

    #[test]
    fn single_point_is_rejected() {
        let s = CostSpace::discrete(1, 1.0).unwrap();
        assert!(make_schedule(&s, DEFAULT_ETA, &SeedContext::new(0), false).is_err());
    }
}

//! Collections on which no coupling can have a small pairwise ratio.

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::space::{CostSpace, SpaceKind};

/// A collection together with a lower bound on the pairwise ratio of every
/// coupling of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub collection: Vec<DiscreteDistribution>,
    pub lower_bound: f64,
}

fn check_points(space: &CostSpace, points: &[usize]) -> Result<()> {
    if let Some(&x) = points.iter().find(|&&x| x >= space.len()) {
        return Err(Error::InvalidInstance(format!(
            "point {x} is outside a space of {} points",
            space.len()
        )));
    }
    Ok(())
}

/// Cycle instance on distinct points `x_1, .., x_k`, `k >= 3`.
///
/// `P_i` is uniform on the cycle points other than `x_i`. Any coupling has
/// ratio at least `2 (k - 1) min_{i<j} c(x_i, x_j) / sum_i c(x_i, x_{i+1})`
/// with `x_{k+1} = x_1`.
pub fn cycle_instance(space: &CostSpace, cycle: &[usize]) -> Result<Instance> {
    let k = cycle.len();
    if k < 3 {
        return Err(Error::InvalidInstance(format!(
            "a cycle needs at least 3 points, got {k}"
        )));
    }
    check_points(space, cycle)?;
    let mut sorted = cycle.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidInstance(format!(
            "point {} appears twice in the cycle",
            w[0]
        )));
    }
    let collection = (0..k)
        .map(|i| {
            let others: Vec<usize> = (0..k).filter(|&j| j != i).map(|j| cycle[j]).collect();
            DiscreteDistribution::uniform_on(space, &others)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut min_c = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            min_c = min_c.min(space.cost(cycle[i], cycle[j]));
        }
    }
    let perimeter: f64 = (0..k).map(|i| space.cost(cycle[i], cycle[(i + 1) % k])).sum();
    Ok(Instance {
        collection,
        lower_bound: 2.0 * (k - 1) as f64 * min_c / perimeter,
    })
}

/// Mixture instance on a sequence `x_1, .., x_{2k}` (repeats allowed).
///
/// `P_i = (delta_{x_i} + delta_{x_{i+k}}) / 2` for `i = 1..k`. With
/// `x_{2k+1} = x_1`, the sequence must satisfy
/// `c(x_i, x_{i+k+1}) + c(x_{i+k}, x_{i+1}) > c(x_i, x_{i+1}) + c(x_{i+k}, x_{i+k+1})`
/// for every `i`; any coupling then has ratio at least
/// `(sum_i (c(x_i, x_{i+1}) + c(x_{i+k}, x_{i+k+1})) / gap_i)^{-1} + 1`,
/// where `gap_i` is the difference of the two sides.
pub fn mixture_instance(space: &CostSpace, points: &[usize]) -> Result<Instance> {
    if points.is_empty() || points.len() % 2 != 0 {
        return Err(Error::InvalidInstance(format!(
            "expected an even, positive number of points, got {}",
            points.len()
        )));
    }
    check_points(space, points)?;
    let k = points.len() / 2;
    let x = |i: usize| points[i % (2 * k)];
    let c = |a: usize, b: usize| space.cost(a, b);
    let mut sum = 0.0;
    for i in 0..k {
        let near = c(x(i), x(i + 1)) + c(x(i + k), x(i + k + 1));
        let far = c(x(i), x(i + k + 1)) + c(x(i + k), x(i + 1));
        let gap = far - near;
        if !(gap > 0.0) {
            return Err(Error::MixtureCondition {
                index: i + 1,
                difference: gap,
            });
        }
        sum += near / gap;
    }
    let collection = (0..k)
        .map(|i| {
            let mut w = vec![0.0; space.len()];
            w[x(i)] += 0.5;
            w[x(i + k)] += 0.5;
            DiscreteDistribution::new(space, w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        collection,
        lower_bound: 1.0 / sum + 1.0,
    })
}

/// Boundary walk of the grid `[0..s]^n` as point indices of `space`.
///
/// `x_1 = 0`; for `i <= k = n s`, `x_i` is the lexicographically largest
/// grid point at `l_1` distance 1 from `x_{i-1}`; `x_{i+k} = (s, .., s) - x_i`.
/// On `[0..s]^n` with `c = ||x - y||_p^q`, `s >= 2` (or `q` large enough),
/// [`mixture_instance`] on this sequence gives at least
/// `((n - 1)^{q/p} s^q - 1) / (n s) + 1`, with equality for `p = infinity`.
pub fn grid_boundary_walk(space: &CostSpace) -> Result<Vec<usize>> {
    if space.kind() != SpaceKind::LpGrid {
        return Err(Error::UnsupportedSpace {
            op: "grid_boundary_walk",
            kind: space.kind().name(),
        });
    }
    let g = space.grid_params().expect("grid has parameters");
    if g.n < 2 || g.s < 1 {
        return Err(invalid("n", "the walk needs n >= 2 and s >= 1"));
    }
    let k = g.n * g.s;
    let mut walk: Vec<Vec<usize>> = Vec::with_capacity(2 * k);
    walk.push(vec![0; g.n]);
    for _ in 1..k {
        let prev = walk.last().expect("walk is non-empty");
        let mut best: Option<Vec<usize>> = None;
        for j in 0..g.n {
            for up in [true, false] {
                let mut y = prev.clone();
                match up {
                    true if y[j] < g.s => y[j] += 1,
                    false if y[j] > 0 => y[j] -= 1,
                    _ => continue,
                }
                if best.as_ref().is_none_or(|b| y > *b) {
                    best = Some(y);
                }
            }
        }
        walk.push(best.expect("every grid point has a neighbour"));
    }
    for i in 0..k {
        let mirrored: Vec<usize> = walk[i].iter().map(|&v| g.s - v).collect();
        walk.push(mirrored);
    }
    Ok(walk
        .iter()
        .map(|c| space.index_of(c).expect("walk stays in the grid"))
        .collect())
}

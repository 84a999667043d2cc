//! Exact two-marginal quantities: the optimal transport cost `C*`, total
//! variation distance, the quantile-coupling cost on ordered spaces, and
//! conditional sampling from a transport plan.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// Largest support size accepted by [`emd_exact`].
pub const ORACLE_SUPPORT_LIMIT: usize = 4096;

/// Joint mass matrix over `support(P) x support(Q)` with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// Row points (support of the first marginal), ascending.
    pub rows: Vec<usize>,
    /// Column points (support of the second marginal), ascending.
    pub cols: Vec<usize>,
    /// Row-major `rows.len() x cols.len()` joint masses.
    pub joint: Vec<f64>,
    /// `sum joint(x, y) c(x, y)`.
    pub cost: f64,
}

impl TransportPlan {
    /// Builds a plan from `(x, y, mass)` triples, accumulating repeats.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        space: &CostSpace,
    ) -> Self {
        let entries: Vec<_> = entries.into_iter().filter(|e| e.2 > 0.0).collect();
        let mut rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let mut cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let mut joint = vec![0.0; rows.len() * cols.len()];
        let mut cost = 0.0;
        for &(x, y, w) in &entries {
            let r = rows.binary_search(&x).expect("row present");
            let c = cols.binary_search(&y).expect("col present");
            joint[r * cols.len() + c] += w;
            cost += w * space.cost(x, y);
        }
        Self {
            rows,
            cols,
            joint,
            cost,
        }
    }

    /// Joint mass at points `(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match (self.rows.binary_search(&x), self.cols.binary_search(&y)) {
            (Ok(r), Ok(c)) => self.joint[r * self.cols.len() + c],
            _ => 0.0,
        }
    }

    /// Non-zero entries as `(x, y, mass)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nc = self.cols.len();
        self.joint
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(move |(k, &w)| (self.rows[k / nc], self.cols[k % nc], w))
    }

    /// Total mass of row point `x`.
    pub fn row_mass(&self, x: usize) -> f64 {
        match self.rows.binary_search(&x) {
            Ok(r) => {
                let nc = self.cols.len();
                self.joint[r * nc..(r + 1) * nc].iter().sum()
            }
            Err(_) => 0.0,
        }
    }

    /// Total mass of column point `y`.
    pub fn col_mass(&self, y: usize) -> f64 {
        match self.cols.binary_search(&y) {
            Ok(c) => (0..self.rows.len())
                .map(|r| self.joint[r * self.cols.len() + c])
                .sum(),
            Err(_) => 0.0,
        }
    }
}

/// Optimal value `C*(P, Q)` with an optimal vertex plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdResult {
    pub value: f64,
    pub plan: TransportPlan,
}

/// Exact optimal transport between `p` and `q` under the cost of `space`.
pub fn emd_exact(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    space: &CostSpace,
) -> Result<EmdResult> {
    p.check_space(space)?;
    q.check_space(space)?;
    let rows = p.support();
    let cols = q.support();
    for s in [&rows, &cols] {
        if s.len() > ORACLE_SUPPORT_LIMIT {
            return Err(Error::SupportTooLarge {
                size: s.len(),
                limit: ORACLE_SUPPORT_LIMIT,
            });
        }
    }
    let supply: Vec<f64> = rows.iter().map(|&x| p.get(x)).collect();
    let demand: Vec<f64> = cols.iter().map(|&y| q.get(y)).collect();
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &x in &rows {
        for &y in &cols {
            cost.push(space.cost(x, y));
        }
    }
    let sol = simplex::solve(&supply, &demand, &cost);
    let mut joint = vec![0.0; rows.len() * cols.len()];
    for &(i, j, f) in &sol.flows {
        joint[i * cols.len() + j] += f;
    }
    let plan = TransportPlan {
        rows,
        cols,
        joint,
        cost: sol.value,
    };
    Ok(EmdResult {
        value: sol.value,
        plan,
    })
}

/// Exact optimal transport between two weight vectors under an explicit
/// row-major cost matrix; returns the value and `(row, col, flow)` entries.
pub fn emd_matrix(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    for len in [supply.len(), demand.len()] {
        if len > ORACLE_SUPPORT_LIMIT {
            return Err(Error::SupportTooLarge {
                size: len,
                limit: ORACLE_SUPPORT_LIMIT,
            });
        }
    }
    let sol = simplex::solve(supply, demand, cost);
    Ok((sol.value, sol.flows))
}

/// Total variation distance `sup_A |P(A) - Q(A)| = (1/2) sum_x |P(x) - Q(x)|`.
pub fn tv_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(tv_slices(p.mass(), q.mass()))
}

/// Total variation between two equal-length mass vectors.
pub fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Expected cost of the quantile coupling `(F_P^{-1}(U), F_Q^{-1}(U))`,
/// computed exactly by merging the two CDF staircases.
pub fn quantile_cost_1d(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    space: &CostSpace,
) -> Result<f64> {
    Ok(quantile_joint_1d(p, q, space)?
        .iter()
        .map(|&(x, y, w)| w * space.cost(x, y))
        .sum())
}

/// Joint law of the quantile coupling as `(x, y, mass)` segments.
pub fn quantile_joint_1d(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    space: &CostSpace,
) -> Result<Vec<(usize, usize, f64)>> {
    p.check_space(space)?;
    q.check_space(space)?;
    let order = space.ordered_points()?;
    let ps: Vec<usize> = order.iter().copied().filter(|&x| p.get(x) > 0.0).collect();
    let qs: Vec<usize> = order.iter().copied().filter(|&x| q.get(x) > 0.0).collect();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (p.get(ps[0]), q.get(qs[0]));
    let mut out = Vec::with_capacity(ps.len() + qs.len());
    loop {
        let w = ra.min(rb);
        if w > 0.0 {
            out.push((ps[i], qs[j], w));
        }
        ra -= w;
        rb -= w;
        let last_p = i + 1 == ps.len();
        let last_q = j + 1 == qs.len();
        if last_p && last_q {
            break;
        }
        // Advance the exhausted staircase; near-ties advance both.
        let eps = 1e-15;
        let adv_p = !last_p && (ra <= eps || last_q);
        let adv_q = !last_q && (rb <= eps || last_p);
        if adv_p {
            i += 1;
            ra = p.get(ps[i]);
        }
        if adv_q {
            j += 1;
            rb = q.get(qs[j]);
        }
        if !adv_p && !adv_q {
            break;
        }
    }
    Ok(out)
}

/// Samples `y` with probability `plan(x, y) / row_mass(x)` using the single
/// uniform of `seed` and CDF inversion over columns in ascending order.
pub fn conditional_sample(plan: &TransportPlan, given_x: usize, seed: &SeedContext) -> Result<usize> {
    let r = plan
        .rows
        .binary_search(&given_x)
        .map_err(|_| Error::ZeroRowMass(given_x))?;
    let nc = plan.cols.len();
    let row = &plan.joint[r * nc..(r + 1) * nc];
    let total: f64 = row.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroRowMass(given_x));
    }
    let target = seed.uniform() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (c, &w) in row.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(c);
            if acc >= target {
                return Ok(plan.cols[c]);
            }
        }
    }
    Ok(plan.cols[last.expect("row has positive mass")])
}

//! Transport plans that move little when their inputs move little.
//!
//! The robust plan of `(P, Q)` is the joint law of the coupled samples
//! `(X_P, X_Q)`. If `P, Q` are perturbed to `P', Q'`, running the same
//! coupling on all four yields a coupling of the two plans whose product
//! cost is `E[c(X_P, X_P') + c(X_Q, X_Q')]`, at most the coupling's ratio
//! times the size of the perturbation.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::couplings::Coupling;
use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Result};
use crate::mc::{trial_seed, BLOCK};
use crate::oracle::{emd_matrix, TransportPlan};
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// Smallest number of trials accepted by [`robust_plan`].
pub const MIN_PLAN_TRIALS: u64 = 1000;

/// Empirical joint law of the coupled samples of `p` and `q` over `trials`
/// child seeds of `master`.
pub fn robust_plan(
    coupling: &Coupling,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    space: &CostSpace,
    trials: u64,
    master: &SeedContext,
) -> Result<TransportPlan> {
    if trials < MIN_PLAN_TRIALS {
        return Err(invalid(
            "trials",
            format!("need at least {MIN_PLAN_TRIALS}, got {trials}"),
        ));
    }
    let pair = [p.clone(), q.clone()];
    coupling.validate(&pair)?;
    p.check_space(space)?;
    let masses = [p.mass(), q.mass()];
    let blocks: Vec<BTreeMap<(usize, usize), u64>> = (0..trials.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut counts = BTreeMap::new();
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                let h = coupling.sample_masses(&masses, &trial_seed(master, t));
                *counts.entry((h[0], h[1])).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for block in blocks {
        for (k, v) in block {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    Ok(TransportPlan::from_entries(
        counts
            .into_iter()
            .map(|((x, y), n)| (x, y, n as f64 / trials as f64)),
        space,
    ))
}

/// Optimal transport cost between two plans under the product cost
/// `c(x, x') + c(y, y')`.
pub fn plan_product_distance(g1: &TransportPlan, g2: &TransportPlan, space: &CostSpace) -> Result<f64> {
    let a: Vec<(usize, usize, f64)> = g1.entries().collect();
    let b: Vec<(usize, usize, f64)> = g2.entries().collect();
    if let Some(&(x, y, _)) = a.iter().chain(&b).find(|e| e.0 >= space.len() || e.1 >= space.len()) {
        return Err(invalid(
            "plan",
            format!("entry ({x}, {y}) is outside a space of {} points", space.len()),
        ));
    }
    let supply: Vec<f64> = a.iter().map(|e| e.2).collect();
    let demand: Vec<f64> = b.iter().map(|e| e.2).collect();
    // Empirical plans can sum to 1 only up to rounding; scale the second to
    // the first so the transportation problem is balanced.
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    let demand: Vec<f64> = demand.iter().map(|v| v * sa / sb).collect();
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for &(x, y, _) in &a {
        for &(x2, y2, _) in &b {
            cost.push(space.cost(x, x2) + space.cost(y, y2));
        }
    }
    Ok(emd_matrix(&supply, &demand, &cost)?.0)
}

/// The five points `(1, 0), (-1, 0), (2 eps^2, 1), (-2 eps^2, 1), (0, -1)` of
/// the plane with the Euclidean distance and cost `d^{1/2}`, together with
/// `P = (delta_0 + delta_1) / 2`, `Q = (delta_2 + delta_4) / 2` and
/// `Q' = (delta_3 + delta_4) / 2`. `C*(Q, Q') = eps`, yet the optimal plans
/// of `(P, Q)` and `(P, Q')` are far apart.
pub fn robust_demo_space(
    eps: f64,
) -> Result<(CostSpace, DiscreteDistribution, DiscreteDistribution, DiscreteDistribution)> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", format!("must lie in (0, 0.5), got {eps}")));
    }
    let e2 = 2.0 * eps * eps;
    let pts = [(1.0, 0.0), (-1.0, 0.0), (e2, 1.0), (-e2, 1.0), (0.0, -1.0)];
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|a: &(f64, f64)| {
            pts.iter()
                .map(|b| (a.0 - b.0).hypot(a.1 - b.1))
                .collect()
        })
        .collect();
    let space = CostSpace::explicit(&rows, 0.5, true)?;
    let half = |i: usize, j: usize| {
        let mut m = vec![0.0; 5];
        m[i] = 0.5;
        m[j] = 0.5;
        DiscreteDistribution::new(&space, m)
    };
    let (p, q, q2) = (half(0, 1)?, half(2, 4)?, half(3, 4)?);
    Ok((space, p, q, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::Algo;
    use crate::oracle::emd_exact;

    #[test]
    fn identical_inputs_give_a_diagonal_plan() {
        let s = CostSpace::discrete(4, 1.0).unwrap();
        let c = Coupling::new(Algo::Metric, &s).unwrap();
        let p = DiscreteDistribution::from_weights(&s, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let plan = robust_plan(&c, &p, &p, &s, 2000, &SeedContext::new(3)).unwrap();
        assert!(plan.entries().all(|(x, y, _)| x == y));
        assert!(robust_plan(&c, &p, &p, &s, 999, &SeedContext::new(3)).is_err());
    }

    #[test]
    fn product_distance_of_point_plans() {
        let s = CostSpace::line(&[0.0, 1.0, 3.0], 1.0).unwrap();
        let g1 = TransportPlan::from_entries([(0, 1, 1.0)], &s);
        let g2 = TransportPlan::from_entries([(0, 2, 1.0)], &s);
        assert!((plan_product_distance(&g1, &g2, &s).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(plan_product_distance(&g1, &g1, &s).unwrap(), 0.0);
    }

    #[test]
    fn demo_space_perturbation_is_eps() {
        let (s, p, q, q2) = robust_demo_space(0.1).unwrap();
        assert!((emd_exact(&q, &q2, &s).unwrap().value - 0.1).abs() < 1e-12);
        let g = emd_exact(&p, &q, &s).unwrap().plan;
        assert!((g.get(0, 2) - 0.5).abs() < 1e-12 && (g.get(1, 4) - 0.5).abs() < 1e-12);
        let g2 = emd_exact(&p, &q2, &s).unwrap().plan;
        assert!((g2.get(0, 4) - 0.5).abs() < 1e-12 && (g2.get(1, 3) - 0.5).abs() < 1e-12);
        assert!(plan_product_distance(&g, &g2, &s).unwrap() >= 2f64.sqrt());
    }
}

//! Rounding a fractional metric labeling with a coupling.
//!
//! Objects `alpha` receive labels `f(alpha)` in a space with cost `c`. The
//! energy is `Q(f) = sum_alpha g(alpha, f(alpha)) + sum_edges w c(f(alpha),
//! f(beta))`. Given a fractional labeling `P_alpha`, its fractional energy is
//! `sum_alpha E_{P_alpha}[g(alpha, .)] + sum_edges w C*(P_alpha, P_beta)`.
//! Labeling every object by its coupled sample under one shared seed gives
//! an expected energy at most the coupling's ratio times the fractional one.

use serde::Serialize;

use crate::couplings::Coupling;
use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Result};
use crate::mc::trial_moments;
use crate::oracle::emd_exact;
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// Objects with assignment costs, weighted edges and a fractional labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingInstance {
    space: CostSpace,
    assignment: Vec<Vec<f64>>,
    edges: Vec<(usize, usize, f64)>,
    fractional: Vec<DiscreteDistribution>,
}

impl LabelingInstance {
    /// `assignment[alpha][x]` is `g(alpha, x)`; edges are `(alpha, beta, w)`
    /// with `w >= 0`; `fractional[alpha]` is `P_alpha`.
    pub fn new(
        space: CostSpace,
        assignment: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, f64)>,
        fractional: Vec<DiscreteDistribution>,
    ) -> Result<Self> {
        let objects = fractional.len();
        if objects == 0 {
            return Err(invalid("fractional", "need at least one object"));
        }
        if assignment.len() != objects {
            return Err(invalid(
                "g",
                format!("{} rows for {objects} objects", assignment.len()),
            ));
        }
        for (a, row) in assignment.iter().enumerate() {
            if row.len() != space.len() {
                return Err(invalid(
                    "g",
                    format!("row {a} has {} entries for {} labels", row.len(), space.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(invalid("g", format!("row {a} has a non-finite entry {v}")));
            }
        }
        for &(a, b, w) in &edges {
            if a >= objects || b >= objects {
                return Err(invalid(
                    "edges",
                    format!("edge ({a}, {b}) names an object outside 0..{objects}"),
                ));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid("edges", format!("edge ({a}, {b}) has weight {w}")));
            }
        }
        for p in &fractional {
            p.check_space(&space)?;
        }
        Ok(Self {
            space,
            assignment,
            edges,
            fractional,
        })
    }

    pub fn space(&self) -> &CostSpace {
        &self.space
    }

    pub fn objects(&self) -> usize {
        self.fractional.len()
    }

    pub fn assignment(&self) -> &[Vec<f64>] {
        &self.assignment
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn fractional(&self) -> &[DiscreteDistribution] {
        &self.fractional
    }

    /// `Q(f)` for a labeling `f`.
    pub fn energy(&self, labels: &[usize]) -> f64 {
        let unary: f64 = labels
            .iter()
            .enumerate()
            .map(|(a, &x)| self.assignment[a][x])
            .sum();
        let pairwise: f64 = self
            .edges
            .iter()
            .map(|&(a, b, w)| w * self.space.cost(labels[a], labels[b]))
            .sum();
        unary + pairwise
    }

    /// Fractional energy with exact transport costs on the edges.
    pub fn fractional_energy(&self) -> Result<f64> {
        let unary: f64 = self
            .fractional
            .iter()
            .zip(&self.assignment)
            .map(|(p, g)| p.mass().iter().zip(g).map(|(m, v)| m * v).sum::<f64>())
            .sum();
        let mut pairwise = 0.0;
        for &(a, b, w) in &self.edges {
            if w > 0.0 {
                pairwise += w * emd_exact(&self.fractional[a], &self.fractional[b], &self.space)?.value;
            }
        }
        Ok(unary + pairwise)
    }
}

/// One rounded labeling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rounding {
    pub labels: Vec<usize>,
    /// `Q(f)` of the rounded labeling.
    pub energy: f64,
    /// Energy of the fractional labeling.
    pub fractional_energy: f64,
}

/// Labels every object by its coupled sample under `seed`.
pub fn round_labels(
    instance: &LabelingInstance,
    coupling: &Coupling,
    seed: &SeedContext,
) -> Result<Rounding> {
    let labels = coupling.sample(&instance.fractional, seed)?;
    Ok(Rounding {
        energy: instance.energy(&labels),
        labels,
        fractional_energy: instance.fractional_energy()?,
    })
}

/// Mean and standard error of `Q(f)` over `trials` child seeds of `master`.
pub fn rounding_moments(
    instance: &LabelingInstance,
    coupling: &Coupling,
    trials: u64,
    master: &SeedContext,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    coupling.validate(&instance.fractional)?;
    let masses: Vec<&[f64]> = instance.fractional.iter().map(|p| p.mass()).collect();
    let m = trial_moments(master, trials, 1, |_, seed, out| {
        out[0] = instance.energy(&coupling.sample_masses(&masses, seed));
    });
    Ok((m.mean(0), m.stderr(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::Algo;

    fn line() -> CostSpace {
        CostSpace::line(&[0.0, 1.0, 2.5, 4.0], 1.0).unwrap()
    }

    #[test]
    fn point_labelings_round_exactly() {
        let s = line();
        let fractional: Vec<_> = [0, 3, 1]
            .iter()
            .map(|&x| DiscreteDistribution::point_mass(&s, x).unwrap())
            .collect();
        let g = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        let inst = LabelingInstance::new(s.clone(), g, vec![(0, 1, 2.0), (1, 2, 0.5)], fractional)
            .unwrap();
        let c = Coupling::new(Algo::Quantile, &s).unwrap();
        let r = round_labels(&inst, &c, &SeedContext::new(4)).unwrap();
        assert_eq!(r.labels, vec![0, 3, 1]);
        let expected = 1.0 + 4.0 + 2.0 + 2.0 * 4.0 + 0.5 * 3.0;
        assert!((r.energy - expected).abs() < 1e-12);
        assert!((r.fractional_energy - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_endpoints_cost_nothing() {
        let s = line();
        let p = DiscreteDistribution::from_weights(&s, vec![1.0, 1.0, 2.0, 0.0]).unwrap();
        let inst = LabelingInstance::new(
            s.clone(),
            vec![vec![0.0; 4]; 2],
            vec![(0, 1, 3.0)],
            vec![p.clone(), p],
        )
        .unwrap();
        let c = Coupling::new(Algo::Metric, &s).unwrap();
        let (mean, _) = rounding_moments(&inst, &c, 300, &SeedContext::new(1)).unwrap();
        assert_eq!(mean, 0.0);
    }

    #[test]
    fn malformed_instances_are_rejected() {
        let s = line();
        let p = DiscreteDistribution::point_mass(&s, 0).unwrap();
        let g = vec![vec![0.0; 4]];
        assert!(LabelingInstance::new(s.clone(), g.clone(), vec![(0, 1, 1.0)], vec![p.clone()]).is_err());
        assert!(LabelingInstance::new(s.clone(), g.clone(), vec![(0, 0, -1.0)], vec![p.clone()]).is_err());
        assert!(LabelingInstance::new(s.clone(), vec![vec![0.0; 3]], vec![], vec![p.clone()]).is_err());
        assert!(LabelingInstance::new(s, vec![], vec![], vec![p]).is_err());
    }
}

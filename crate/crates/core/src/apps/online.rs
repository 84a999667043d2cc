//! Online transport: a point `Z_t` must follow a sequence of distributions
//! `P_0, P_1, ..` with `Z_t ~ P_t`, paying `c(Z_{t-1}, Z_t)` per step.
//!
//! Task `t` either introduces a new distribution, revisits an earlier task
//! `b < t` (the point must return to the stored `Z_b`), or stops the
//! sequence. The greedy scheme moves along the optimal plan of each step;
//! the preemptive scheme sets `Z_t` to the coupled sample of `P_t` under one
//! seed shared by the whole run.

use serde::{Deserialize, Serialize};

use crate::couplings::Coupling;
use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::mc::trial_moments;
use crate::oracle::{conditional_sample, emd_exact, TransportPlan};
use crate::seed::SeedContext;
use crate::space::CostSpace;

/// One task after the initial one.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    /// A distribution seen for the first time.
    New(DiscreteDistribution),
    /// Return to the point of an earlier task.
    Revisit(usize),
    /// End of the sequence; only allowed as the last task.
    Stop,
}

/// An initial distribution `P_0` followed by tasks `1, 2, ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSequence {
    initial: DiscreteDistribution,
    tasks: Vec<Task>,
}

impl TaskSequence {
    /// Checks that revisits point backwards, that `Stop` is terminal and that
    /// all distributions share one space.
    pub fn new(initial: DiscreteDistribution, tasks: Vec<Task>) -> Result<Self> {
        for (i, task) in tasks.iter().enumerate() {
            let t = i + 1;
            match task {
                Task::New(p) => p.check_same_space(&initial)?,
                Task::Revisit(b) if *b >= t => {
                    return Err(invalid(
                        "tasks",
                        format!("task {t} revisits {b}, which is not earlier"),
                    ))
                }
                Task::Revisit(_) => {}
                Task::Stop if t != tasks.len() => {
                    return Err(invalid(
                        "tasks",
                        format!("stop at task {t} is not the last task"),
                    ))
                }
                Task::Stop => {}
            }
        }
        Ok(Self { initial, tasks })
    }

    /// Builds a sequence from `(b_t, P_t)` pairs for `t = 1, 2, ..`:
    /// `b_t = t` is a new task, `0 <= b_t < t` a revisit whose `P_t` must
    /// equal `P_{b_t}`, and `b_t = -1` a stop.
    pub fn from_indexed(
        initial: DiscreteDistribution,
        steps: Vec<(i64, DiscreteDistribution)>,
    ) -> Result<Self> {
        let mut tasks = Vec::with_capacity(steps.len());
        let mut seen: Vec<DiscreteDistribution> = vec![initial.clone()];
        for (i, (b, p)) in steps.into_iter().enumerate() {
            let t = i as i64 + 1;
            let task = match b {
                -1 => Task::Stop,
                b if b == t => Task::New(p.clone()),
                b if (0..t).contains(&b) => {
                    let earlier = &seen[b as usize];
                    let gap = earlier
                        .mass()
                        .iter()
                        .zip(p.mass())
                        .map(|(a, c)| (a - c).abs())
                        .fold(0.0, f64::max);
                    if earlier.len() != p.len() || gap > 1e-9 {
                        return Err(invalid(
                            "tasks",
                            format!("task {t} revisits {b} with a different distribution"),
                        ));
                    }
                    Task::Revisit(b as usize)
                }
                b => {
                    return Err(invalid(
                        "tasks",
                        format!("task {t} has index {b}; expected -1, {t} or an earlier task"),
                    ))
                }
            };
            seen.push(p);
            tasks.push(task);
        }
        Self::new(initial, tasks)
    }

    pub fn initial(&self) -> &DiscreteDistribution {
        &self.initial
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    /// Number of moves, not counting a final stop.
    pub fn steps(&self) -> usize {
        self.tasks.len() - usize::from(matches!(self.tasks.last(), Some(Task::Stop)))
    }

    /// The distribution of task `t`, following revisits.
    pub fn dist(&self, t: usize) -> &DiscreteDistribution {
        match t {
            0 => &self.initial,
            t => match &self.tasks[t - 1] {
                Task::New(p) => p,
                Task::Revisit(b) => self.dist(*b),
                Task::Stop => panic!("task {t} is a stop"),
            },
        }
    }

    /// `sum_t C*(P_{t-1}, P_t)` over all moves.
    pub fn sum_optimal_cost(&self, space: &CostSpace) -> Result<f64> {
        (1..=self.steps())
            .map(|t| Ok(emd_exact(self.dist(t - 1), self.dist(t), space)?.value))
            .sum()
    }
}

/// How the point follows the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Move along the optimal plan of each step.
    Greedy,
    /// Take the coupled sample of each task under one shared seed.
    Preemptive,
}

/// Monte Carlo summary of an online run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnlineResult {
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `sum_t C*(P_{t-1}, P_t)`.
    pub sum_optimal: f64,
}

/// Index drawn from `mass` by inverting its CDF in index order.
fn invert(mass: &[f64], u: f64) -> usize {
    let target = u * mass.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (x, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last = x;
            if acc >= target {
                return x;
            }
        }
    }
    last
}

/// Mean total cost of `scheme` on `seq` over `trials` child seeds of
/// `master`.
///
/// Revisits are forced moves to the stored `Z_b` under both schemes. The
/// greedy scheme draws `Z_0` from `P_0` by inversion and each new `Z_t` from
/// the optimal plan of `(P_{t-1}, P_t)` conditioned on `Z_{t-1}`.
pub fn online_simulate(
    scheme: Scheme,
    seq: &TaskSequence,
    space: &CostSpace,
    coupling: &Coupling,
    trials: u64,
    master: &SeedContext,
) -> Result<OnlineResult> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    seq.initial.check_space(space)?;
    let steps = seq.steps();
    let sum_optimal = seq.sum_optimal_cost(space)?;
    let moments = match scheme {
        Scheme::Greedy => {
            let plans: Vec<Option<TransportPlan>> = (1..=steps)
                .map(|t| match seq.tasks[t - 1] {
                    Task::New(ref p) => Ok(Some(emd_exact(seq.dist(t - 1), p, space)?.plan)),
                    _ => Ok(None),
                })
                .collect::<Result<_>>()?;
            // Every row of a plan has positive mass exactly where the
            // previous task does, so conditional sampling cannot fail.
            trial_moments(master, trials, 1, |_, seed, out| {
                let mut z = Vec::with_capacity(steps + 1);
                z.push(invert(seq.initial.mass(), seed.tag("init").uniform()));
                let mut total = 0.0;
                for t in 1..=steps {
                    let next = match (&plans[t - 1], &seq.tasks[t - 1]) {
                        (Some(plan), _) => {
                            conditional_sample(plan, z[t - 1], &seed.child("step", t as i64))
                                .expect("row of the previous marginal")
                        }
                        (None, Task::Revisit(b)) => z[*b],
                        (None, _) => unreachable!("only moves are simulated"),
                    };
                    total += space.cost(z[t - 1], next);
                    z.push(next);
                }
                out[0] = total;
            })
        }
        Scheme::Preemptive => {
            let mut distinct = vec![seq.initial.clone()];
            let mut slot = vec![0usize; steps + 1];
            for t in 1..=steps {
                slot[t] = match &seq.tasks[t - 1] {
                    Task::New(p) => {
                        distinct.push(p.clone());
                        distinct.len() - 1
                    }
                    Task::Revisit(b) => slot[*b],
                    Task::Stop => unreachable!("only moves are simulated"),
                };
            }
            coupling.validate(&distinct)?;
            let masses: Vec<&[f64]> = distinct.iter().map(|p| p.mass()).collect();
            trial_moments(master, trials, 1, |_, seed, out| {
                let z = coupling.sample_masses(&masses, seed);
                out[0] = (1..=steps)
                    .map(|t| space.cost(z[slot[t - 1]], z[slot[t]]))
                    .sum();
            })
        }
    };
    Ok(OnlineResult {
        trials,
        mean: moments.mean(0),
        stderr: moments.stderr(0),
        sum_optimal,
    })
}

/// How the adversarial circle instance measures distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircleVariant {
    /// `2l` points of the unit circle in the plane with the Euclidean
    /// (chord) distance.
    Chord,
    /// `2l` equispaced points of the circle of circumference 1 with the arc
    /// distance.
    Intrinsic,
}

/// The adversarial instance on `2l` points of a circle with cost `d^{1/2}`.
///
/// Point `j` sits at angle `pi j / l`, and `P_t` puts mass `1/2` on points
/// `t` and `t + l`. Tasks `t <= l - 2` are new; afterwards the sequence
/// alternates between revisiting task 0 (when `t - l` is odd) and task
/// `l - 2` (when `t - l` is even), up to task `T`.
pub fn circle_online_instance(
    l: usize,
    horizon: usize,
    variant: CircleVariant,
) -> Result<(CostSpace, TaskSequence)> {
    if l < 4 {
        return Err(invalid("l", format!("must be at least 4, got {l}")));
    }
    if horizon <= l {
        return Err(invalid("T", format!("must exceed l = {l}, got {horizon}")));
    }
    let k = 2 * l;
    let space = match variant {
        CircleVariant::Chord => {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            let gap = i.abs_diff(j) as f64;
                            2.0 * (std::f64::consts::PI * gap / k as f64).sin().abs()
                        })
                        .collect()
                })
                .collect();
            CostSpace::explicit(&rows, 0.5, true)?
        }
        CircleVariant::Intrinsic => CostSpace::equispaced_circle(k, 0.5)?,
    };
    let antipodal = |t: usize| {
        let mut m = vec![0.0; k];
        m[t] = 0.5;
        m[t + l] = 0.5;
        DiscreteDistribution::new(&space, m)
    };
    let mut tasks = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        tasks.push(if t <= l - 2 {
            Task::New(antipodal(t)?)
        } else if (t as i64 - l as i64).rem_euclid(2) == 1 {
            Task::Revisit(0)
        } else {
            Task::Revisit(l - 2)
        });
    }
    let seq = TaskSequence::new(antipodal(0)?, tasks).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::InvalidInstance(reason),
        e => e,
    })?;
    Ok((space, seq))
}

/// Exact total cost of the greedy scheme on [`circle_online_instance`].
///
/// Each of the `l - 2` new tasks rotates both atoms by one position, and
/// each of the `T - l + 2` revisits jumps `l - 2` positions.
pub fn greedy_closed_form(l: usize, horizon: usize, variant: CircleVariant) -> f64 {
    let (l_f, moves) = (l as f64, (horizon + 2 - l) as f64);
    let step = |j: f64| match variant {
        CircleVariant::Chord => (2.0 * (std::f64::consts::PI * j / (2.0 * l_f)).sin()).sqrt(),
        CircleVariant::Intrinsic => (j / (2.0 * l_f)).sqrt(),
    };
    (l_f - 2.0) * step(1.0) + moves * step(l_f - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::Algo;

    #[test]
    fn instance_shape() {
        let (space, seq) = circle_online_instance(6, 10, CircleVariant::Chord).unwrap();
        assert_eq!(space.len(), 12);
        assert_eq!(seq.steps(), 10);
        for t in 1..=4 {
            assert_eq!(seq.tasks()[t - 1], Task::New(seq.dist(t).clone()));
            assert_eq!(seq.dist(t).support(), vec![t, t + 6]);
        }
        assert_eq!(seq.tasks()[4], Task::Revisit(0));
        assert_eq!(seq.tasks()[5], Task::Revisit(4));
        assert_eq!(seq.tasks()[6], Task::Revisit(0));
        for variant in [CircleVariant::Chord, CircleVariant::Intrinsic] {
            let (space, _) = circle_online_instance(5, 8, variant).unwrap();
            let antipode = match variant {
                CircleVariant::Chord => 2.0,
                CircleVariant::Intrinsic => 0.5,
            };
            assert!((space.dist(1, 6) - antipode).abs() < 1e-12);
        }
        assert!(circle_online_instance(3, 8, CircleVariant::Chord).is_err());
        assert!(circle_online_instance(5, 5, CircleVariant::Chord).is_err());
    }

    #[test]
    fn greedy_is_deterministic_on_the_circle_instance() {
        for variant in [CircleVariant::Chord, CircleVariant::Intrinsic] {
            let (space, seq) = circle_online_instance(6, 11, variant).unwrap();
            let c = Coupling::new(Algo::Poisson, &space).unwrap();
            let r = online_simulate(Scheme::Greedy, &seq, &space, &c, 64, &SeedContext::new(2))
                .unwrap();
            let expected = greedy_closed_form(6, 11, variant);
            assert!((r.mean - expected).abs() < 1e-9 * expected, "{variant:?}");
            assert!(r.stderr < 1e-9);
        }
    }

    #[test]
    fn constant_sequence_costs_nothing() {
        let s = CostSpace::discrete(4, 1.0).unwrap();
        let p = DiscreteDistribution::from_weights(&s, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let seq = TaskSequence::new(
            p.clone(),
            vec![Task::New(p.clone()), Task::Revisit(1), Task::New(p), Task::Stop],
        )
        .unwrap();
        assert_eq!(seq.steps(), 3);
        let c = Coupling::new(Algo::Metric, &s).unwrap();
        for scheme in [Scheme::Greedy, Scheme::Preemptive] {
            let r = online_simulate(scheme, &seq, &s, &c, 200, &SeedContext::new(9)).unwrap();
            assert_eq!(r.mean, 0.0);
            assert_eq!(r.sum_optimal, 0.0);
        }
    }

    #[test]
    fn malformed_sequences_are_rejected() {
        let s = CostSpace::discrete(3, 1.0).unwrap();
        let p = DiscreteDistribution::point_mass(&s, 0).unwrap();
        let q = DiscreteDistribution::point_mass(&s, 1).unwrap();
        assert!(TaskSequence::new(p.clone(), vec![Task::Revisit(1)]).is_err());
        assert!(TaskSequence::new(p.clone(), vec![Task::Stop, Task::New(q.clone())]).is_err());
        assert!(TaskSequence::from_indexed(p.clone(), vec![(0, q.clone())]).is_err());
        assert!(TaskSequence::from_indexed(p.clone(), vec![(3, q.clone())]).is_err());
        assert!(TaskSequence::from_indexed(p.clone(), vec![(-2, q.clone())]).is_err());
        let ok = TaskSequence::from_indexed(
            p.clone(),
            vec![(1, q.clone()), (0, p.clone()), (1, q.clone()), (-1, q)],
        )
        .unwrap();
        assert_eq!(
            ok.tasks(),
            &[
                Task::New(DiscreteDistribution::point_mass(&s, 1).unwrap()),
                Task::Revisit(0),
                Task::Revisit(1),
                Task::Stop
            ]
        );
        assert_eq!(ok.sum_optimal_cost(&s).unwrap(), 3.0);
    }
}

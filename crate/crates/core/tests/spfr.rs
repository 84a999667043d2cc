//! Sequential Poisson functional representation and the hashes built on it.

mod common;

use common::{euclidean_rows, marginal_tolerance, plane_points, rng, weights};
use pairwise_ot::couplings::{Algo, Coupling};
use pairwise_ot::mc::{empirical_tv, trial_counts, trial_moments};
use pairwise_ot::oracle::tv_slices;
use pairwise_ot::seed::RecordingRace;
use pairwise_ot::spfr::schedule::{reduced_level_bound, schedule_theta};
use pairwise_ot::spfr::{
    chain_joint_law, spfr_chain, torus_kernel, BallKernel, MetricLsh, TorusLsh,
};
use pairwise_ot::{CostSpace, DiscreteDistribution, SeedContext};
use proptest::prelude::*;
use rand::Rng;

/// Three ball kernels on `space`: the widest ball, a middle radius and the
/// identity.
fn three_kernels(space: &CostSpace) -> Vec<BallKernel> {
    let mut costs: Vec<f64> = (0..space.len())
        .flat_map(|x| (x + 1..space.len()).map(move |y| (x, y)))
        .map(|(x, y)| space.cost(x, y))
        .collect();
    costs.sort_by(f64::total_cmp);
    let radii = [costs[costs.len() - 1], costs[costs.len() / 2], costs[0] / 2.0];
    radii.iter().map(|&w| BallKernel::metric(space, w).unwrap()).collect()
}

#[test]
fn chain_disagreement_is_bounded_by_partial_laws() {
    let mut r = rng(21);
    let trials = 40_000u64;
    for case in 0..12 {
        let len = r.random_range(3..=5);
        let pts: Vec<(f64, f64)> = (0..len)
            .map(|i| (r.random::<f64>() * 4.0 + 0.3 * i as f64, r.random::<f64>() * 4.0))
            .collect();
        let space = CostSpace::explicit(&euclidean_rows(&pts), 1.0, true).unwrap();
        let kernels = three_kernels(&space);
        let p = common::random_dist(&mut r, &space, len);
        let q = common::random_dist(&mut r, &space, len);
        let chain: Vec<(i64, &BallKernel)> = kernels.iter().enumerate().map(|(i, k)| (i as i64, k)).collect();
        let m = trial_moments(&SeedContext::new(case), trials, 3, |_, seed, out| {
            let a = spfr_chain(p.mass(), &chain, seed);
            let b = spfr_chain(q.mass(), &chain, seed);
            let mut differ = false;
            for i in 0..3 {
                differ |= a[i] != b[i];
                out[i] = differ as u8 as f64;
            }
        });
        let refs: Vec<&BallKernel> = kernels.iter().collect();
        let tv: Vec<f64> = (0..3)
            .map(|j| {
                tv_slices(
                    &chain_joint_law(p.mass(), &refs[..=j]),
                    &chain_joint_law(q.mass(), &refs[..=j]),
                )
            })
            .collect();
        for i in 0..3 {
            let bound: f64 = (0..=i)
                .map(|j| 2.0 * (1.0 + (j < i) as u8 as f64) * tv[j])
                .sum();
            let observed = m.mean(i);
            assert!(
                observed <= bound + 3.0 * m.stderr(i) + 1e-12,
                "case {case}, level {i}: P(disagree) {observed} > bound {bound}"
            );
        }
    }
}

#[test]
fn chain_law_of_each_level_has_the_right_marginal() {
    let space = CostSpace::line(&[0.0, 1.0, 2.0, 4.0], 1.0).unwrap();
    let kernels = three_kernels(&space);
    let refs: Vec<&BallKernel> = kernels.iter().collect();
    let p = [0.1, 0.4, 0.2, 0.3];
    let law = chain_joint_law(&p, &refs);
    assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // The last kernel is the identity, so the last observation is X ~ P.
    let mut last = [0.0; 4];
    for (idx, v) in law.iter().enumerate() {
        last[idx % 4] += v;
    }
    for x in 0..4 {
        assert!((last[x] - p[x]).abs() < 1e-12);
    }
    let chain: Vec<(i64, &BallKernel)> = kernels.iter().enumerate().map(|(i, k)| (i as i64, k)).collect();
    let trials = 100_000;
    let counts = trial_counts(&SeedContext::new(2), trials, 64, |_, seed| {
        let z = spfr_chain(&p, &chain, seed);
        z[0] * 16 + z[1] * 4 + z[2]
    });
    let tv = empirical_tv(&counts, &law);
    assert!(tv <= marginal_tolerance(64, trials), "joint tv {tv}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_hash_is_the_chain_over_its_schedule(
        (pts, w) in (2usize..8).prop_flat_map(|n| (plane_points(n), weights(n))),
        seed in any::<u64>(),
        q in prop_oneof![Just(1.0), Just(0.5)],
    ) {
        let space = CostSpace::explicit(&euclidean_rows(&pts), q, true).unwrap();
        let lsh = MetricLsh::new(&space);
        let seed = SeedContext::new(seed);
        let sch = lsh.schedule(&seed).unwrap();
        let kernels: Vec<BallKernel> = sch.levels.iter().map(|&i| BallKernel::metric(&space, sch.radius(i)).unwrap()).collect();
        let chain: Vec<(i64, &BallKernel)> = sch.levels.iter().copied().zip(&kernels).collect();
        let p = DiscreteDistribution::from_weights(&space, w).unwrap();
        let z = spfr_chain(p.mass(), &chain, &seed);
        prop_assert_eq!(*z.last().unwrap(), lsh.hash_with(p.mass(), &sch, &seed));
    }

    #[test]
    fn reduced_schedules_are_short(
        pts in (2usize..12).prop_flat_map(plane_points),
        seed in any::<u64>(),
    ) {
        let space = CostSpace::explicit(&euclidean_rows(&pts), 1.0, true).unwrap();
        let lsh = MetricLsh::new(&space).with_reduced(true);
        let sch = lsh.schedule(&SeedContext::new(seed)).unwrap();
        prop_assert!(sch.levels.len() as f64 <= reduced_level_bound(space.len(), lsh.eta()));
        prop_assert!(sch.levels.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ball_kernel_rows_are_stochastic(
        pts in (1usize..9).prop_flat_map(plane_points),
        w in 0.01f64..20.0,
    ) {
        let space = CostSpace::explicit(&euclidean_rows(&pts), 1.0, true).unwrap();
        let k = BallKernel::metric(&space, w).unwrap();
        for x in 0..space.len() {
            prop_assert!((k.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(k.get(x, x) > 0.0);
        }
    }

    #[test]
    fn torus_kernel_weights_sum_to_one(
        n in 1usize..3,
        s in 2usize..5,
        p in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0f64..4.0],
        w in 0.05f64..6.0,
    ) {
        let t = CostSpace::lp_torus(n, s, p, 1.0).unwrap();
        let k = torus_kernel(&t, w, 8).unwrap();
        prop_assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(k.weights().iter().all(|&v| v >= 0.0));
        let dense = k.to_dense();
        for x in 0..t.len() {
            prop_assert!((dense.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

fn grid_points(t: &CostSpace) -> Vec<usize> {
    (0..t.len()).filter(|&i| t.in_embedded_grid(i)).collect()
}

#[test]
fn torus_hash_is_the_chain_over_dense_kernels() {
    let mut r = rng(8);
    for (n, s, p, eta) in [(1, 3, 2.0, None), (1, 4, 1.0, Some(0.8)), (2, 2, f64::INFINITY, Some(1.0)), (2, 3, 2.0, Some(1.3))] {
        let t = CostSpace::lp_torus(n, s, p, 1.0).unwrap();
        let lsh = match eta {
            Some(e) => TorusLsh::with_eta(&t, e).unwrap(),
            None => TorusLsh::new(&t).unwrap(),
        };
        let grid = grid_points(&t);
        let (i0, i1) = lsh.level_range();
        for trial in 0..40 {
            let support: Vec<usize> = grid.iter().copied().filter(|_| r.random_bool(0.5)).collect();
            let support = if support.is_empty() { vec![grid[0]] } else { support };
            let dist = common::random_dist_on(&mut r, &t, &support);
            let seed = SeedContext::new(1000 + trial);
            let theta = schedule_theta(&seed);
            let kernels: Vec<BallKernel> = (i0..=i1)
                .map(|i| lsh.kernel((-lsh.eta() * (i as f64 + theta)).exp()).to_dense())
                .collect();
            let chain: Vec<(i64, &BallKernel)> = (i0..=i1).zip(&kernels).collect();
            let z = spfr_chain(dist.mass(), &chain, &seed);
            let h = lsh.hash_masses_with(&[dist.mass()], theta, &seed)[0];
            assert_eq!(*z.last().unwrap(), h, "n={n} s={s} p={p} trial {trial}");
        }
    }
}

fn check_marginal(algo: Algo, space: &CostSpace, p: &DiscreteDistribution, trials: u64) {
    let c = Coupling::new(algo, space).unwrap();
    let mass = [p.mass()];
    let counts = trial_counts(&SeedContext::new(77), trials, space.len(), |_, seed| c.sample_masses(&mass, seed)[0]);
    let tv = empirical_tv(&counts, p.mass());
    let tol = marginal_tolerance(space.len(), trials);
    assert!(tv <= tol, "{algo}: marginal tv {tv} > {tol}");
    for (x, &cnt) in counts.iter().enumerate() {
        assert!(cnt == 0 || p.get(x) > 0.0, "{algo}: sampled {x} outside the support");
    }
}

#[test]
fn metric_hashes_have_the_right_marginal() {
    let mut r = rng(4);
    let pts: Vec<(f64, f64)> = (0..9).map(|i| (r.random::<f64>() * 5.0 + 0.2 * i as f64, r.random::<f64>() * 5.0)).collect();
    let space = CostSpace::explicit(&euclidean_rows(&pts), 1.0, true).unwrap();
    let p = common::random_dist(&mut r, &space, 9);
    check_marginal(Algo::Metric, &space, &p, 100_000);
    check_marginal(Algo::Ultrametric, &space, &p, 100_000);
    let half = space.with_q(0.5).unwrap();
    let p = p.rebind(&half).unwrap();
    check_marginal(Algo::Metric, &half, &p, 100_000);
}

#[test]
fn torus_hash_has_the_right_marginal() {
    let mut r = rng(5);
    let t = CostSpace::lp_torus(2, 3, 2.0, 1.0).unwrap();
    let grid = grid_points(&t);
    let support: Vec<usize> = grid.iter().copied().step_by(2).collect();
    let p = common::random_dist_on(&mut r, &t, &support);
    check_marginal(Algo::Torus, &t, &p, 100_000);
}

#[test]
fn hashing_one_distribution_reads_only_seed_values() {
    let space = CostSpace::line(&[0.0, 1.0, 1.5, 4.0, 7.0, 7.5], 1.0).unwrap();
    let lsh = MetricLsh::new(&space);
    let p = DiscreteDistribution::from_weights(&space, vec![1.0, 0.0, 2.0, 1.0, 0.0, 1.0]).unwrap();
    let q = DiscreteDistribution::from_weights(&space, vec![0.0, 1.0, 0.0, 0.0, 3.0, 1.0]).unwrap();
    for t in 0..100 {
        let seed = SeedContext::new(t);
        let sch = lsh.schedule(&seed).unwrap();
        let rec = RecordingRace::new(&seed);
        let hp = lsh.hash_with(p.mass(), &sch, &rec);
        let hq = lsh.hash_with(q.mass(), &sch, &rec);
        for (level, x, v) in rec.reads() {
            assert_eq!(v.to_bits(), seed.exponential(level, x).to_bits());
        }
        // Hashing alone or within a collection gives the same value.
        assert_eq!(lsh.hash_many(&[p.mass(), q.mass()], &seed), vec![hp, hq]);
        assert_eq!(lsh.hash(&p, &seed).unwrap(), hp);
    }
}

#[test]
fn torus_hash_is_universal() {
    let mut r = rng(6);
    let t = CostSpace::lp_torus(2, 3, 1.0, 1.0).unwrap();
    let lsh = TorusLsh::new(&t).unwrap();
    let grid = grid_points(&t);
    let ds: Vec<_> = (0..4).map(|_| common::random_dist_on(&mut r, &t, &grid)).collect();
    let refs: Vec<&DiscreteDistribution> = ds.iter().collect();
    for seed in 0..30 {
        let seed = SeedContext::new(seed);
        let joint = lsh.hash_many(&refs, &seed).unwrap();
        let single: Vec<usize> = ds.iter().map(|d| lsh.hash(d, &seed).unwrap()).collect();
        assert_eq!(joint, single);
    }
}

#[test]
fn torus_rejects_mass_off_the_grid() {
    let t = CostSpace::lp_torus(1, 3, 2.0, 1.0).unwrap();
    let off = (0..t.len()).find(|&i| !t.in_embedded_grid(i)).unwrap();
    let p = DiscreteDistribution::point_mass(&t, off).unwrap();
    assert!(TorusLsh::new(&t).unwrap().hash(&p, &SeedContext::new(1)).is_err());
}

mod common;

use common::{all_sets, random_cube_point, random_graph, random_instance, value};
use dcg_core::algorithms::{audit_trace, brute_force_opt, central_cg, distributed_cg, sequential_greedy, RunConfig};
use dcg_core::ground::{MembershipVector, PolicySet};
use dcg_core::multilinear::{estimate_grad_block, exact_f, exact_grad, exact_hessian_entry};
use dcg_core::network::CommGraph;
use dcg_core::oracle::check_monotone_submodular;
use dcg_core::seed::stream;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn block_sizes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 2..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_distributed_run_passes_audit(
        sizes in block_sizes(),
        seed in any::<u64>(),
        steps in 1usize..25,
        samples in 1usize..30,
        extra in 0.0f64..0.6,
        full in any::<bool>(),
    ) {
        let inst = random_instance(seed, &sizes, 40, 0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let graph = random_graph(&mut rng, sizes.len(), extra);
        let hops = if full { graph.diameter().max(1) } else { 1 };
        let cfg = RunConfig::uniform(sizes.len(), steps, samples, hops, seed);
        let out = distributed_cg(&inst.oracle, &inst.part, &graph, &cfg).unwrap();
        prop_assert_eq!(audit_trace(&out.trace, &inst.part, &graph, &cfg), Ok(()));
        for (i, block) in inst.part.blocks().iter().enumerate() {
            prop_assert_eq!(out.chosen.iter().filter(|p| block.contains(p)).count(), 1, "agent {}", i);
        }
    }

    #[test]
    fn full_consensus_output_ignores_topology(sizes in block_sizes(), seed in any::<u64>(), steps in 1usize..15) {
        let inst = random_instance(seed, &sizes, 40, 0.2);
        let n = sizes.len();
        let cfg_for = |g: &CommGraph| RunConfig::uniform(n, steps, 8, g.diameter().max(1), seed);
        let central = central_cg(&inst.oracle, &inst.part, &RunConfig::uniform(n, steps, 8, 1, seed)).unwrap();
        for graph in [CommGraph::ring(n).unwrap(), CommGraph::path(n).unwrap(), CommGraph::star(n).unwrap(), CommGraph::complete(n).unwrap()] {
            let out = distributed_cg(&inst.oracle, &inst.part, &graph, &cfg_for(&graph)).unwrap();
            prop_assert_eq!(&out.chosen, &central.chosen);
            for (step, c) in out.trace.steps.iter().zip(&central.trace.steps) {
                prop_assert_eq!(&step.chosen, &c.chosen);
                prop_assert!(step.after.iter().all(|b| *b == c.after[0]));
            }
        }
    }

    #[test]
    fn central_matches_complete_graph(sizes in block_sizes(), seed in any::<u64>(), steps in 1usize..15) {
        let inst = random_instance(seed, &sizes, 30, 0.2);
        let n = sizes.len();
        let cfg = RunConfig::uniform(n, steps, 6, 1, seed);
        let central = central_cg(&inst.oracle, &inst.part, &cfg).unwrap();
        let dist = distributed_cg(&inst.oracle, &inst.part, &CommGraph::complete(n).unwrap(), &cfg).unwrap();
        prop_assert_eq!(central.chosen, dist.chosen);
        prop_assert_eq!(central.utility, dist.utility);
    }

    #[test]
    fn coverage_is_monotone_submodular(sizes in prop::collection::vec(1usize..=4, 1..=3), seed in any::<u64>()) {
        let inst = random_instance(seed, &sizes, 30, 0.25);
        prop_assert!(check_monotone_submodular(&inst.oracle).unwrap().passed());
        let full: PolicySet = (0..inst.part.n()).collect();
        prop_assert!(value(&inst.oracle, &full) <= 30.0);
    }

    #[test]
    fn vertex_agreement(sizes in prop::collection::vec(1usize..=4, 1..=3), seed in any::<u64>()) {
        let inst = random_instance(seed, &sizes, 25, 0.3);
        let n = inst.part.n();
        for s in all_sets(n) {
            prop_assert_eq!(exact_f(&inst.oracle, &MembershipVector::indicator(n, &s)).unwrap(), value(&inst.oracle, &s));
        }
    }

    #[test]
    fn gradient_and_curvature_signs(sizes in prop::collection::vec(1usize..=3, 2..=3), seed in any::<u64>()) {
        let inst = random_instance(seed, &sizes, 25, 0.3);
        let n = inst.part.n();
        let max_single = (0..n).map(|p| value(&inst.oracle, &PolicySet::from_mask(1 << p))).fold(0.0, f64::max);
        let (_, f_star) = brute_force_opt(&inst.oracle, &inst.part).unwrap();
        prop_assert!(max_single <= f_star);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let x = random_cube_point(&mut rng, n);
            for p in 0..n {
                prop_assert!(exact_grad(&inst.oracle, &x, p).unwrap() >= -1e-12);
                for q in (0..n).filter(|&q| q != p) {
                    let h = exact_hessian_entry(&inst.oracle, &x, p, q).unwrap();
                    prop_assert!(h <= 1e-12);
                    prop_assert!(h.abs() <= max_single + 1e-12);
                }
            }
        }
    }

    #[test]
    fn smoothness(sizes in prop::collection::vec(1usize..=3, 2..=3), seed in any::<u64>(), eps in 0.0f64..=1.0) {
        let inst = random_instance(seed, &sizes, 25, 0.3);
        let n = inst.part.n();
        let (_, alpha) = brute_force_opt(&inst.oracle, &inst.part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1 = random_cube_point(&mut rng, n);
        let lift = random_cube_point(&mut rng, n);
        let x2: Vec<f64> = x1.as_slice().iter().zip(lift.as_slice()).map(|(a, b)| a + (1.0 - a) * b).collect();
        let x2 = MembershipVector::new(x2).unwrap();
        let d: Vec<f64> = x2.as_slice().iter().zip(x1.as_slice()).map(|(b, a)| b - a).collect();
        let beta: f64 = d.iter().sum();
        let mid = MembershipVector::new(x1.as_slice().iter().zip(&d).map(|(a, di)| a + eps * di).collect()).unwrap();
        let mut linear = 0.0;
        for (p, dp) in d.iter().enumerate() {
            let g1 = exact_grad(&inst.oracle, &x1, p).unwrap();
            let gm = exact_grad(&inst.oracle, &mid, p).unwrap();
            prop_assert!((gm - g1).abs() <= eps * alpha * beta + 1e-9);
            linear += g1 * dp;
        }
        let rise = exact_f(&inst.oracle, &x2).unwrap() - exact_f(&inst.oracle, &x1).unwrap();
        prop_assert!(rise >= linear - alpha * beta * beta / 2.0 - 1e-9);
    }

    #[test]
    fn sequential_greedy_half_bound(sizes in block_sizes(), seed in any::<u64>()) {
        let inst = random_instance(seed, &sizes, 30, 0.2);
        let (_, f_star) = brute_force_opt(&inst.oracle, &inst.part).unwrap();
        let order: Vec<usize> = (0..sizes.len()).rev().collect();
        let sg = sequential_greedy(&inst.oracle, &inst.part, &order).unwrap();
        prop_assert!(value(&inst.oracle, &sg) >= f_star / 2.0);
    }
}

#[test]
fn gradient_estimate_is_unbiased() {
    let inst = random_instance(11, &[3, 3], 30, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = common::random_unit_blocks(&mut rng, &inst.part);
    let info = dcg_core::ground::InfoSet::from_entries(x.as_slice().iter().copied().enumerate().filter(|e| e.1 > 0.0))
        .unwrap();
    let runs = 4000;
    for agent in 0..2 {
        let block = inst.part.block(agent);
        let mut draws = vec![Vec::with_capacity(runs); block.len()];
        for seed in 0..runs as u64 {
            let est = estimate_grad_block(
                &inst.oracle,
                &info,
                &inst.part,
                agent,
                1,
                &mut stream(seed, agent, 0, 0),
            )
            .unwrap();
            for (d, w) in draws.iter_mut().zip(est.w) {
                d.push(w);
            }
        }
        for (p, d) in block.zip(draws) {
            let mean = d.iter().sum::<f64>() / runs as f64;
            let var = d.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
            let exact = exact_grad(&inst.oracle, &x, p).unwrap();
            let band = 3.0 * (var / runs as f64).sqrt();
            assert!(
                (mean - exact).abs() <= band + 1e-12,
                "p={p}: mean {mean} exact {exact} band {band}"
            );
        }
    }
}

//! Sequential-fixer guarantees: the output always verifies, the flip count
//! respects both the potential/lambda bound and the edge-count bound for
//! the cut problem, and policies are reproducible.

use lop_sim::analysis::random_small_instance;
use lop_sim::baseline::{sequential_fix, FixPolicy};
use lop_sim::lop::{locally_optimal_cut, total_potential, verify_solution, Labeling};
use lop_sim::rational::{rat_int, rat_to_f64};
use lop_sim::seed::derive_seed;

#[test]
fn output_verifies_for_every_policy_and_seed() {
    let p = locally_optimal_cut(3);
    for instance in 0..30u64 {
        let (g, l) = random_small_instance(&p, 12, derive_seed(501, instance));
        for policy in [
            FixPolicy::LowestId,
            FixPolicy::Random { seed: instance },
            FixPolicy::Random { seed: instance + 1 },
        ] {
            let (out, trace) = sequential_fix(&p, &g, &l, policy);
            assert!(verify_solution(&p, &g, &out).ok);
            let pot0 = total_potential(&p, &g, &l);
            let bound = (rat_to_f64(pot0 / p.lambda)).floor() as usize;
            assert!(trace.flips() <= bound, "flips bounded by pot0 / lambda");
        }
    }
}

#[test]
fn flip_count_bounded_by_edges_from_all_same_labels() {
    let p = locally_optimal_cut(3);
    for seed in 0..25u64 {
        let g = lop_sim::graph::random_regular(40, 3, 600 + seed).unwrap();
        let l = Labeling::uniform(&g, 1, 0);
        let (out, trace) = sequential_fix(&p, &g, &l, FixPolicy::LowestId);
        assert!(verify_solution(&p, &g, &out).ok);
        assert!(trace.flips() <= g.edge_count());
        // each step decreases the potential by at least lambda, exactly
        for step in &trace.steps {
            assert!(step.pot_before - step.pot_after >= p.lambda);
        }
    }
}

#[test]
fn cascade_length_on_the_all_same_path_is_linear() {
    let p = locally_optimal_cut(2);
    let mut counts = Vec::new();
    for n in [16usize, 32, 64, 128] {
        let g = lop_sim::generate(&lop_sim::GraphKind::Path { n }).unwrap();
        let l = Labeling::uniform(&g, 1, 0);
        let (_, trace) = sequential_fix(&p, &g, &l, FixPolicy::LowestId);
        counts.push((n, trace.flips()));
    }
    // the frozen cascade: exactly floor(n/2) flips at nodes 0, 2, 4, ...
    for &(n, flips) in &counts {
        assert_eq!(flips, n / 2, "lowest-id cascade on the path");
    }
}

#[test]
fn potential_trajectory_is_exact() {
    let p = locally_optimal_cut(3);
    let (g, l) = random_small_instance(&p, 12, 999);
    let (out, trace) = sequential_fix(&p, &g, &l, FixPolicy::LowestId);
    let mut pot = total_potential(&p, &g, &l);
    for step in &trace.steps {
        assert_eq!(step.pot_before, pot);
        pot = step.pot_after;
    }
    assert_eq!(pot, total_potential(&p, &g, &out));
    assert!(pot >= rat_int(0));
}

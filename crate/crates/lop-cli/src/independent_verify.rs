//! A second, deliberately separate implementation of the solution check:
//! for every node, try every relabel of the node and its incident
//! half-edges and recompute the total potential from scratch each time.
//! The library's verifier works incrementally over local balls; this one
//! never does, so the two act as independent routes to the same answer.

use lop_sim::graph::{LabeledGraph, NodeId};
use lop_sim::lop::{Labeling, LopProblem};

fn total_scaled(problem: &LopProblem, g: &LabeledGraph, l: &Labeling) -> i64 {
    (0..g.n()).map(|v| problem.psi_scaled(g, l, v)).sum()
}

pub fn independent_violations(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
) -> Vec<NodeId> {
    let mut violations = Vec::new();
    for v in 0..g.n() {
        let mut work = l.clone();
        let base_cost = problem.psi_scaled(g, &work, v);
        let base_total = total_scaled(problem, g, &work);
        let deg = g.degree(v);
        let he_alpha = &problem.half_edge_out_labels;
        let mut he_choice = vec![0usize; deg];
        let mut violating = false;
        'outer: loop {
            for (p, &idx) in he_choice.iter().enumerate() {
                work.half_edge_out[v][p] = he_alpha[idx];
            }
            for &lab in &problem.node_out_labels {
                work.node_out[v] = lab;
                let cost = problem.psi_scaled(g, &work, v);
                let total = total_scaled(problem, g, &work);
                if cost < base_cost && total < base_total {
                    violating = true;
                    break 'outer;
                }
            }
            let mut p = 0;
            loop {
                if p == deg {
                    break 'outer;
                }
                he_choice[p] += 1;
                if he_choice[p] < he_alpha.len() {
                    break;
                }
                he_choice[p] = 0;
                p += 1;
            }
        }
        if violating {
            violations.push(v);
        }
    }
    violations
}

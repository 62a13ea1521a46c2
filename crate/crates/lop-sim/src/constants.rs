//! Exhaustive computation of the problem constants: the minimum and maximum
//! single-center improvement over all constraint-violating centered views of
//! radius 2r with degree <= the problem bound.
//!
//! The structural enumerator covers radius-1 problems (views of radius 2):
//! a center with k <= max_degree neighbors, any edge set among the
//! neighbors, and an outer shell of nodes attached to neighbors only (an
//! edge of a radius-2 view needs an endpoint at distance <= 1, so
//! outer-outer edges cannot occur). Every such view is its own radius-2
//! view of itself, so the family is exactly the one the constants range
//! over. Labelings are enumerated exhaustively per structure.

use crate::graph::{LabeledGraph, NodeId};
use crate::lop::{center_scan, Labeling, LopError, LopProblem};
use crate::rational::{rat, Rat};

/// An enumerated view structure before labeling: center 0, first-shell
/// nodes 1..=k, outer nodes after that.
struct ViewStructure {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
}

fn shell_edge_subsets(k: usize, max_degree: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (1..=k)
        .flat_map(|i| ((i + 1)..=k).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let chosen: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let mut deg = vec![1usize; k + 1]; // each shell node already touches the center
        let mut ok = true;
        for &(a, b) in &chosen {
            deg[a] += 1;
            deg[b] += 1;
            if deg[a] > max_degree || deg[b] > max_degree {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(chosen);
        }
    }
    out
}

/// Attachment patterns for outer nodes: multisets of nonempty subsets of
/// the shell, limited by each shell node's remaining degree capacity.
fn outer_patterns(k: usize, caps: &[usize]) -> Vec<Vec<u32>> {
    let types: Vec<u32> = (1u32..(1 << k)).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        types: &[u32],
        idx: usize,
        caps: &mut Vec<usize>,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if idx == types.len() {
            out.push(current.clone());
            return;
        }
        // zero or more outer nodes of this attachment type
        rec(types, idx + 1, caps, current, out);
        let t = types[idx];
        let members: Vec<usize> = (0..caps.len()).filter(|i| t >> i & 1 == 1).collect();
        let mut added = 0;
        while members.iter().all(|&i| caps[i] > 0) {
            for &i in &members {
                caps[i] -= 1;
            }
            current.push(t);
            added += 1;
            rec(types, idx + 1, caps, current, out);
        }
        for _ in 0..added {
            current.pop();
            for &i in &members {
                caps[i] += 1;
            }
        }
    }
    let mut caps = caps.to_vec();
    rec(&types, 0, &mut caps, &mut current, &mut out);
    out
}

fn structures(max_degree: usize) -> Vec<ViewStructure> {
    let mut out = Vec::new();
    for k in 0..=max_degree {
        for shell_edges in shell_edge_subsets(k, max_degree) {
            let mut deg = vec![0usize; k + 1];
            for i in 1..=k {
                deg[i] = 1;
            }
            for &(a, b) in &shell_edges {
                deg[a] += 1;
                deg[b] += 1;
            }
            let caps: Vec<usize> = (1..=k).map(|i| max_degree - deg[i]).collect();
            for pattern in outer_patterns(k, &caps) {
                let mut edges: Vec<(NodeId, NodeId)> = (1..=k).map(|i| (0, i)).collect();
                edges.extend(shell_edges.iter().copied());
                let mut next = k + 1;
                for &t in &pattern {
                    for i in 0..k {
                        if t >> i & 1 == 1 {
                            edges.push((i + 1, next));
                        }
                    }
                    next += 1;
                }
                out.push(ViewStructure { n: next, edges });
            }
        }
    }
    out
}

/// The (lambda, max improvement) pair by brute force over every labeled
/// radius-2 view. `cap` bounds the number of (structure, labeling) pairs;
/// callers must supply the constants analytically when it is exceeded.
pub fn compute_constants(problem: &LopProblem, cap: u128) -> Result<(Rat, Rat), LopError> {
    if problem.radius != 1 {
        // the structural enumerator only covers radius-2 views
        return Err(LopError::EnumerationTooLarge(u128::MAX, cap));
    }
    let structs = structures(problem.max_degree);
    let node_alpha = problem.node_in_labels.len() as u128 * problem.node_out_labels.len() as u128;
    let he_alpha =
        problem.half_edge_in_labels.len() as u128 * problem.half_edge_out_labels.len() as u128;
    let mut total: u128 = 0;
    for s in &structs {
        let labelings = node_alpha
            .checked_pow(s.n as u32)
            .and_then(|x| he_alpha.checked_pow(2 * s.edges.len() as u32).map(|y| x * y));
        match labelings {
            Some(l) => total = total.saturating_add(l),
            None => total = u128::MAX,
        }
        if total > cap {
            return Err(LopError::EnumerationTooLarge(total, cap));
        }
    }

    let mut min_drop: Option<i64> = None;
    let mut max_drop: Option<i64> = None;
    for s in &structs {
        let g = LabeledGraph::build(s.n, &s.edges).expect("enumerated structure is simple");
        // odometer over node outputs, inputs, and half-edge labels
        let node_slots = s.n;
        let he_slots: Vec<(NodeId, usize)> = (0..s.n)
            .flat_map(|v| (0..g.degree(v)).map(move |p| (v, p)))
            .collect();
        let radices: Vec<usize> = std::iter::repeat_n(problem.node_in_labels.len(), node_slots)
            .chain(std::iter::repeat_n(problem.node_out_labels.len(), node_slots))
            .chain(std::iter::repeat_n(problem.half_edge_in_labels.len(), he_slots.len()))
            .chain(std::iter::repeat_n(problem.half_edge_out_labels.len(), he_slots.len()))
            .collect();
        let mut digits = vec![0usize; radices.len()];
        let mut g = g;
        loop {
            let mut l = Labeling {
                node_out: vec![0; s.n],
                half_edge_out: (0..s.n).map(|v| vec![0; g.degree(v)]).collect(),
            };
            for v in 0..node_slots {
                g.node_labels[v].0 = problem.node_in_labels[digits[v]];
                l.node_out[v] = problem.node_out_labels[digits[node_slots + v]];
            }
            for (i, &(v, p)) in he_slots.iter().enumerate() {
                g.half_edge_labels[v][p].0 =
                    problem.half_edge_in_labels[digits[2 * node_slots + i]];
                l.half_edge_out[v][p] =
                    problem.half_edge_out_labels[digits[2 * node_slots + he_slots.len() + i]];
            }
            let scan = center_scan(problem, &g, &mut l, 0);
            if scan.best_fix.is_some() {
                let drop = scan.best_drop_any;
                min_drop = Some(min_drop.map_or(drop, |m| m.min(drop)));
                max_drop = Some(max_drop.map_or(drop, |m| m.max(drop)));
            }
            // advance the odometer
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break;
                }
                digits[i] += 1;
                if digits[i] < radices[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    match (min_drop, max_drop) {
        (Some(lo), Some(hi)) => Ok((rat(lo, problem.scale), rat(hi, problem.scale))),
        _ => Err(LopError::ProblemInfeasible(
            "no constraint-violating view exists; the problem is trivially satisfied".into(),
        )),
    }
}

//! The centralized sequential fixer: repeatedly pick a constraint-violating
//! node and apply the best single-center relabel. Ground truth for small
//! instances and the fallback path of the main algorithm.

use crate::graph::{Label, LabeledGraph, NodeId};
use crate::improving::best_relabeling;
use crate::lop::{best_center_fix, total_potential, Labeling, LopProblem};
use crate::rational::Rat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum FixPolicy {
    LowestId,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixStep {
    pub node: NodeId,
    pub old_label: Label,
    pub new_label: Label,
    pub pot_before: Rat,
    pub pot_after: Rat,
}

#[derive(Debug, Clone, Default)]
pub struct FixTrace {
    pub steps: Vec<FixStep>,
}

impl FixTrace {
    pub fn flips(&self) -> usize {
        self.steps.len()
    }
}

/// Run the fixer to completion. The output always verifies: the loop only
/// stops when no violating node remains, and it terminates because every
/// step drops the potential by at least the problem's minimum improvement.
pub fn sequential_fix(
    problem: &LopProblem,
    g: &LabeledGraph,
    initial: &Labeling,
    policy: FixPolicy,
) -> (Labeling, FixTrace) {
    let mut l = initial.clone();
    let mut rng = match policy {
        FixPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        FixPolicy::LowestId => None,
    };
    let mut scratch = l.clone();
    let mut violating: BTreeSet<NodeId> = (0..g.n())
        .filter(|&v| best_center_fix(problem, g, &mut scratch, v).is_some())
        .collect();
    let mut trace = FixTrace::default();
    let mut pot = total_potential(problem, g, &l);
    while !violating.is_empty() {
        let v = match rng.as_mut() {
            None => *violating.iter().next().unwrap(),
            Some(r) => {
                let idx = r.gen_range(0..violating.len());
                *violating.iter().nth(idx).unwrap()
            }
        };
        let (delta, imp) =
            best_relabeling(problem, g, &l, &[v], 1 << 24).expect("single node fits any cap");
        let old_label = l.node_out[v];
        delta.apply(&mut l);
        let new_pot = pot - imp;
        trace.steps.push(FixStep {
            node: v,
            old_label,
            new_label: l.node_out[v],
            pot_before: pot,
            pot_after: new_pot,
        });
        pot = new_pot;
        // only views within 2r of v changed
        scratch = l.clone();
        for u in g.ball(v, 2 * problem.radius) {
            if best_center_fix(problem, g, &mut scratch, u).is_some() {
                violating.insert(u);
            } else {
                violating.remove(&u);
            }
        }
    }
    (l, trace)
}

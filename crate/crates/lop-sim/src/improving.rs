//! Improving sets: improvement, improving ratio, best relabelings, the
//! bounded search for high-ratio sets inside a cluster, and maximal
//! sequences of such sets.
//!
//! The search enumerates connected node subsets only (a disconnected
//! improving set is a disjoint union of improving components, one of which
//! has at least the whole's ratio), sizes ascending, seeds in id order,
//! with exhaustive relabel search per candidate. Everything is
//! deterministic: ties break by node id and then by the relabel vector.
//!
//! The size cap makes this a bounded search: "maximal" means no further
//! set exists within the caps, not over all subsets of the cluster. Runs
//! therefore certify their results through final verification, and the
//! caps travel in the trace.

use crate::graph::{Label, LabeledGraph, NodeId};
use crate::lop::{Labeling, LopProblem};
use crate::rational::{rat, rat_int, Rat};
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("relabel delta touches node {0} outside the target set")]
    DeltaTouchesOutsideA(NodeId),
    #[error("search space too large: {0} assignments exceed cap {1}")]
    SearchSpaceTooLarge(u128, u128),
    #[error("input set is not a minimal improving set")]
    MinimalityPrereqFailed,
}

/// New output labels for a node set and its incident half-edges, relative
/// to some base labeling. Entries are sorted and only present if the slot
/// exists; unchanged slots may be listed (with their old value) or omitted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelabelDelta {
    pub nodes: Vec<(NodeId, Label)>,
    pub half_edges: Vec<((NodeId, usize), Label)>,
}

impl RelabelDelta {
    pub fn apply(&self, l: &mut Labeling) {
        for &(v, lab) in &self.nodes {
            l.node_out[v] = lab;
        }
        for &((v, p), lab) in &self.half_edges {
            l.half_edge_out[v][p] = lab;
        }
    }

    /// Old values of the touched slots, for reverting.
    pub fn capture_old(&self, l: &Labeling) -> RelabelDelta {
        RelabelDelta {
            nodes: self.nodes.iter().map(|&(v, _)| (v, l.node_out[v])).collect(),
            half_edges: self
                .half_edges
                .iter()
                .map(|&((v, p), _)| ((v, p), l.half_edge_out[v][p]))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprovingSet {
    /// Sorted node set A.
    pub nodes: Vec<NodeId>,
    pub relabel: RelabelDelta,
    pub improvement: Rat,
    pub improving_ratio: Rat,
}

#[derive(Debug, Clone)]
pub struct ImprovingSequence {
    pub steps: Vec<ImprovingSet>,
    pub base: Labeling,
    pub final_labeling: Labeling,
    pub threshold: Rat,
}

impl ImprovingSequence {
    pub fn total_improvement(&self) -> Rat {
        self.steps.iter().map(|s| s.improvement).sum()
    }
}

/// Scaled potential sum over the radius-r ball of a node set.
fn ball_sum(problem: &LopProblem, g: &LabeledGraph, l: &Labeling, ball: &[NodeId]) -> i64 {
    ball.iter().map(|&u| problem.psi_scaled(g, l, u)).sum()
}

/// Potential drop caused by a relabel delta confined to `set`, computed
/// over the radius-r ball of the set only. Equals the full-graph potential
/// difference because Psi is unchanged farther than r from the set.
pub fn improvement(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    set: &[NodeId],
    delta: &RelabelDelta,
) -> Result<Rat, SearchError> {
    for &(v, _) in &delta.nodes {
        if !set.contains(&v) {
            return Err(SearchError::DeltaTouchesOutsideA(v));
        }
    }
    for &((v, _), _) in &delta.half_edges {
        if !set.contains(&v) {
            return Err(SearchError::DeltaTouchesOutsideA(v));
        }
    }
    if set.is_empty() {
        return Ok(Rat::zero());
    }
    let ball = g.ball_of_set(set, problem.radius);
    let mut work = l.clone();
    let before = ball_sum(problem, g, &work, &ball);
    delta.apply(&mut work);
    let after = ball_sum(problem, g, &work, &ball);
    Ok(rat(before - after, problem.scale))
}

/// One relabel slot of a candidate set.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Node(NodeId),
    HalfEdge(NodeId, usize),
}

struct SlotSpace {
    slots: Vec<Slot>,
    /// Radius-r ball of the slot's node, for incremental re-evaluation.
    slot_balls: Vec<Vec<NodeId>>,
    radices: Vec<usize>,
}

fn slot_space(problem: &LopProblem, g: &LabeledGraph, set: &[NodeId]) -> SlotSpace {
    let mut slots = Vec::new();
    for &v in set {
        slots.push(Slot::Node(v));
    }
    for &v in set {
        for p in 0..g.degree(v) {
            slots.push(Slot::HalfEdge(v, p));
        }
    }
    let slot_balls = slots
        .iter()
        .map(|s| match *s {
            Slot::Node(v) | Slot::HalfEdge(v, _) => g.ball(v, problem.radius),
        })
        .collect();
    let radices = slots
        .iter()
        .map(|s| match s {
            Slot::Node(_) => problem.node_out_labels.len(),
            Slot::HalfEdge(..) => problem.half_edge_out_labels.len(),
        })
        .collect();
    SlotSpace {
        slots,
        slot_balls,
        radices,
    }
}

fn assignment_count(space: &SlotSpace) -> u128 {
    space
        .radices
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
        .unwrap_or(u128::MAX)
}

/// Exhaustive scan of all relabelings of a set. Works on a scratch
/// labeling (restored on return) and reports the best scaled drop with the
/// lexicographically-first witness digits.
fn best_relabel_scan(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &mut Labeling,
    set: &[NodeId],
    space: &SlotSpace,
) -> (i64, Vec<usize>) {
    if set.is_empty() {
        return (0, Vec::new());
    }
    let ball = g.ball_of_set(set, problem.radius);
    let base = ball_sum(problem, g, l, &ball);

    let saved: Vec<Label> = space
        .slots
        .iter()
        .map(|s| match *s {
            Slot::Node(v) => l.node_out[v],
            Slot::HalfEdge(v, p) => l.half_edge_out[v][p],
        })
        .collect();

    let mut best_drop = i64::MIN;
    let mut best_digits = Vec::new();
    let mut digits = vec![0usize; space.slots.len()];

    fn set_slot(l: &mut Labeling, slot: Slot, lab: Label) {
        match slot {
            Slot::Node(v) => l.node_out[v] = lab,
            Slot::HalfEdge(v, p) => l.half_edge_out[v][p] = lab,
        }
    }

    // DFS over slots in order; cur tracks the scaled sum over the set ball.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        problem: &LopProblem,
        g: &LabeledGraph,
        l: &mut Labeling,
        space: &SlotSpace,
        i: usize,
        cur: i64,
        base: i64,
        digits: &mut Vec<usize>,
        best_drop: &mut i64,
        best_digits: &mut Vec<usize>,
    ) {
        if i == space.slots.len() {
            let drop = base - cur;
            if drop > *best_drop {
                *best_drop = drop;
                *best_digits = digits.clone();
            }
            return;
        }
        let slot = space.slots[i];
        let alphabet = match slot {
            Slot::Node(_) => &problem.node_out_labels,
            Slot::HalfEdge(..) => &problem.half_edge_out_labels,
        };
        let old = match slot {
            Slot::Node(v) => l.node_out[v],
            Slot::HalfEdge(v, p) => l.half_edge_out[v][p],
        };
        for (idx, &lab) in alphabet.iter().enumerate() {
            let local_before = ball_sum(problem, g, l, &space.slot_balls[i]);
            set_slot(l, slot, lab);
            let local_after = ball_sum(problem, g, l, &space.slot_balls[i]);
            digits[i] = idx;
            rec(
                problem,
                g,
                l,
                space,
                i + 1,
                cur + local_after - local_before,
                base,
                digits,
                best_drop,
                best_digits,
            );
            set_slot(l, slot, old);
        }
        digits[i] = 0;
    }

    rec(
        problem,
        g,
        l,
        space,
        0,
        base,
        base,
        &mut digits,
        &mut best_drop,
        &mut best_digits,
    );

    for (slot, lab) in space.slots.iter().zip(&saved) {
        set_slot(l, *slot, *lab);
    }
    (best_drop, best_digits)
}

fn digits_to_delta(space: &SlotSpace, problem: &LopProblem, digits: &[usize]) -> RelabelDelta {
    let mut delta = RelabelDelta::default();
    for (slot, &d) in space.slots.iter().zip(digits) {
        match *slot {
            Slot::Node(v) => delta.nodes.push((v, problem.node_out_labels[d])),
            Slot::HalfEdge(v, p) => delta
                .half_edges
                .push(((v, p), problem.half_edge_out_labels[d])),
        }
    }
    delta
}

/// The best relabeling of `set` (and its incident half-edges) and its
/// improvement. Ties break toward the lexicographically-first relabel
/// vector; the identity is always a candidate, so the improvement is >= 0.
pub fn best_relabeling(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    set: &[NodeId],
    cap: u128,
) -> Result<(RelabelDelta, Rat), SearchError> {
    let space = slot_space(problem, g, set);
    let count = assignment_count(&space);
    if count > cap {
        return Err(SearchError::SearchSpaceTooLarge(count, cap));
    }
    let mut work = l.clone();
    let (drop, digits) = best_relabel_scan(problem, g, &mut work, set, &space);
    let delta = digits_to_delta(&space, problem, &digits);
    Ok((delta, rat(drop, problem.scale)))
}

/// Search limits for improving-set discovery.
#[derive(Debug, Clone, Copy)]
pub struct SearchBounds {
    pub min_ratio: Rat,
    pub diameter_cap: usize,
    pub size_cap: usize,
}

/// Stateful per-cluster search: enumerates candidates from each interior
/// seed, remembers which (size, seed) pairs were exhausted, and clears
/// those memos only when a committed relabel lands close enough to matter.
pub(crate) struct ClusterSearch<'a> {
    problem: &'a LopProblem,
    g: &'a LabeledGraph,
    in_cluster: Vec<bool>,
    /// Nodes whose (2r+1)-ball stays inside the cluster, ascending.
    pub interior: Vec<NodeId>,
    is_interior: Vec<bool>,
    interior_pos: Vec<usize>,
    pub labeling: Labeling,
    exhausted: Vec<Vec<bool>>,
    bounds: SearchBounds,
    collect_buf: Option<Vec<ImprovingSet>>,
}

impl<'a> ClusterSearch<'a> {
    pub fn new(
        problem: &'a LopProblem,
        g: &'a LabeledGraph,
        labeling: Labeling,
        cluster: &[NodeId],
        bounds: SearchBounds,
    ) -> Self {
        let mut cluster: Vec<NodeId> = cluster.to_vec();
        cluster.sort_unstable();
        let mut in_cluster = vec![false; g.n()];
        for &v in &cluster {
            in_cluster[v] = true;
        }
        let margin = 2 * problem.radius + 1;
        let interior: Vec<NodeId> = cluster
            .iter()
            .copied()
            .filter(|&v| g.ball(v, margin).iter().all(|&u| in_cluster[u]))
            .collect();
        let mut is_interior = vec![false; g.n()];
        let mut interior_pos = vec![usize::MAX; g.n()];
        for (i, &v) in interior.iter().enumerate() {
            is_interior[v] = true;
            interior_pos[v] = i;
        }
        let exhausted = vec![vec![false; interior.len()]; bounds.size_cap];
        ClusterSearch {
            problem,
            g,
            in_cluster,
            interior,
            is_interior,
            interior_pos,
            labeling,
            exhausted,
            bounds,
            collect_buf: None,
        }
    }

    /// First improving set with ratio >= the bound, sizes ascending, seeds
    /// in id order, candidate enumeration in a fixed order per seed.
    pub fn find_one(&mut self) -> Option<ImprovingSet> {
        for k in 1..=self.bounds.size_cap {
            for pos in 0..self.interior.len() {
                if self.exhausted[k - 1][pos] {
                    continue;
                }
                let seed = self.interior[pos];
                if let Some(hit) = self.search_seed(seed, k) {
                    return Some(hit);
                }
                self.exhausted[k - 1][pos] = true;
            }
        }
        None
    }

    /// Apply a found set to the working labeling and un-exhaust every seed
    /// whose candidates could now evaluate differently.
    pub fn commit(&mut self, set: &ImprovingSet) {
        set.relabel.apply(&mut self.labeling);
        let reach = 2 * self.problem.radius + self.bounds.size_cap - 1;
        for v in self.g.ball_of_set(&set.nodes, reach) {
            let pos = self.interior_pos[v];
            if pos != usize::MAX {
                for k in 0..self.bounds.size_cap {
                    self.exhausted[k][pos] = false;
                }
            }
        }
    }

    fn search_seed(&mut self, seed: NodeId, k: usize) -> Option<ImprovingSet> {
        let mut sub = vec![seed];
        let ext: Vec<NodeId> = self
            .g
            .neighbors(seed)
            .iter()
            .copied()
            .filter(|&u| u > seed && self.is_interior[u])
            .collect();
        let mut ext = ext;
        ext.sort_unstable();
        self.extend(&mut sub, ext, seed, k)
    }

    /// ESU-style enumeration of connected subsets of the interior with
    /// minimum node `root` and size exactly `k`.
    fn extend(
        &mut self,
        sub: &mut Vec<NodeId>,
        ext: Vec<NodeId>,
        root: NodeId,
        k: usize,
    ) -> Option<ImprovingSet> {
        if sub.len() == k {
            return self.evaluate(sub);
        }
        for (i, &w) in ext.iter().enumerate() {
            let mut child_ext: Vec<NodeId> = ext[i + 1..].to_vec();
            for &u in self.g.neighbors(w) {
                if u > root
                    && self.is_interior[u]
                    && !sub.contains(&u)
                    && !sub.iter().any(|&s| self.g.neighbors(s).contains(&u))
                {
                    child_ext.push(u);
                }
            }
            child_ext.sort_unstable();
            child_ext.dedup();
            sub.push(w);
            let hit = self.extend(sub, child_ext, root, k);
            sub.pop();
            if hit.is_some() {
                return hit;
            }
        }
        None
    }

    fn evaluate(&mut self, sub: &[NodeId]) -> Option<ImprovingSet> {
        let k = sub.len();
        if k >= 2 && k - 1 > self.bounds.diameter_cap && !self.diameter_ok(sub) {
            return None;
        }
        let mut set: Vec<NodeId> = sub.to_vec();
        set.sort_unstable();
        let space = slot_space(self.problem, self.g, &set);
        let (drop, digits) = best_relabel_scan(self.problem, self.g, &mut self.labeling, &set, &space);
        // drop/scale >= R * k, compared exactly
        let r = self.bounds.min_ratio;
        let lhs = drop as i128 * *r.denom() as i128;
        let rhs = *r.numer() as i128 * k as i128 * self.problem.scale as i128;
        if drop > 0 && lhs >= rhs {
            let delta = digits_to_delta(&space, self.problem, &digits);
            let improvement = rat(drop, self.problem.scale);
            let hit = ImprovingSet {
                nodes: set,
                relabel: delta,
                improvement,
                improving_ratio: improvement / rat_int(k as i64),
            };
            match self.collect_buf.as_mut() {
                Some(buf) => buf.push(hit),
                None => return Some(hit),
            }
        }
        None
    }

    /// Enumerate every candidate in the bounds and return all hits without
    /// committing any of them.
    pub fn collect_all(&mut self) -> Vec<ImprovingSet> {
        self.collect_buf = Some(Vec::new());
        for k in 1..=self.bounds.size_cap {
            for pos in 0..self.interior.len() {
                let seed = self.interior[pos];
                let none = self.search_seed(seed, k);
                debug_assert!(none.is_none());
            }
        }
        self.collect_buf.take().unwrap_or_default()
    }

    fn diameter_ok(&self, sub: &[NodeId]) -> bool {
        // strong diameter inside the cluster-induced subgraph
        for &s in sub {
            let mut dist = vec![usize::MAX; self.g.n()];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for &y in self.g.neighbors(x) {
                    if self.in_cluster[y] && dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            for &t in sub {
                if dist[t] == usize::MAX || dist[t] > self.bounds.diameter_cap {
                    return false;
                }
            }
        }
        true
    }

    /// Run to exhaustion, committing each find.
    pub fn run_maximal(&mut self) -> ImprovingSequence {
        let base = self.labeling.clone();
        let mut steps = Vec::new();
        while let Some(set) = self.find_one() {
            self.commit(&set);
            steps.push(set);
        }
        ImprovingSequence {
            steps,
            base,
            final_labeling: self.labeling.clone(),
            threshold: self.bounds.min_ratio,
        }
    }
}

/// One-shot bounded search for an improving set with ratio >= the bound
/// whose (2r+1)-ball stays inside the cluster. Absence is a value.
pub fn find_improving_set(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    cluster: &[NodeId],
    bounds: SearchBounds,
) -> Option<ImprovingSet> {
    ClusterSearch::new(problem, g, l.clone(), cluster, bounds).find_one()
}

/// Every improving set the bounded search can emit for this labeling, with
/// nothing committed. Used by audits that need the full residual picture.
pub fn collect_improving_sets(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    cluster: &[NodeId],
    bounds: SearchBounds,
) -> Vec<ImprovingSet> {
    ClusterSearch::new(problem, g, l.clone(), cluster, bounds).collect_all()
}

/// Repeatedly find and commit improving sets until none is left within the
/// search bounds. Terminates because every step drops the potential by at
/// least ratio * |A| > 0.
pub fn maximal_sequence(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    cluster: &[NodeId],
    bounds: SearchBounds,
) -> ImprovingSequence {
    ClusterSearch::new(problem, g, l.clone(), cluster, bounds).run_maximal()
}

/// Whether no proper subset admits a relabeling with strictly larger
/// improving ratio. Exhaustive; for oracle use on small sets only.
pub fn is_minimal(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    set: &ImprovingSet,
    cap: u128,
) -> Result<bool, SearchError> {
    let n = set.nodes.len();
    if n > 20 {
        return Err(SearchError::SearchSpaceTooLarge(1 << n, cap));
    }
    for mask in 0u32..(1 << n) {
        if mask == (1u32 << n) - 1 {
            continue; // proper subsets only
        }
        let subset: Vec<NodeId> = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| set.nodes[i])
            .collect();
        if subset.is_empty() {
            continue; // empty set has ratio 0
        }
        let (_, imp) = best_relabeling(problem, g, l, &subset, cap)?;
        if imp / rat_int(subset.len() as i64) > set.improving_ratio {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Independent re-check of the four emission conditions of the bounded
/// search, with the improvement recomputed as a full-graph potential
/// difference.
pub fn validate_emitted_set(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    set: &ImprovingSet,
    cluster: &[NodeId],
    bounds: SearchBounds,
) -> bool {
    use crate::lop::total_potential;
    let mut after = l.clone();
    set.relabel.apply(&mut after);
    let full_drop = total_potential(problem, g, l) - total_potential(problem, g, &after);
    if full_drop != set.improvement || set.improvement <= Rat::zero() {
        return false;
    }
    if set.improving_ratio != set.improvement / rat_int(set.nodes.len() as i64) {
        return false;
    }
    if set.improving_ratio < bounds.min_ratio || set.nodes.len() > bounds.size_cap {
        return false;
    }
    let in_cluster: std::collections::HashSet<NodeId> = cluster.iter().copied().collect();
    let margin = 2 * problem.radius + 1;
    if !g
        .ball_of_set(&set.nodes, margin)
        .iter()
        .all(|v| in_cluster.contains(v))
    {
        return false;
    }
    // diameter inside the cluster-induced subgraph
    if set.nodes.len() >= 2 {
        let cluster_sorted: Vec<NodeId> = {
            let mut c = cluster.to_vec();
            c.sort_unstable();
            c
        };
        let mut max_d = 0usize;
        for &s in &set.nodes {
            let mut dist = std::collections::HashMap::new();
            dist.insert(s, 0usize);
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                let dx = dist[&x];
                for &y in g.neighbors(x) {
                    if cluster_sorted.binary_search(&y).is_ok() && !dist.contains_key(&y) {
                        dist.insert(y, dx + 1);
                        queue.push_back(y);
                    }
                }
            }
            for &t in &set.nodes {
                match dist.get(&t) {
                    Some(&d) => max_d = max_d.max(d),
                    None => return false,
                }
            }
        }
        if max_d > bounds.diameter_cap {
            return false;
        }
    }
    true
}

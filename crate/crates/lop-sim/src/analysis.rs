//! Brute-force oracles for the structural facts the algorithm rests on:
//! the subset-improvement inequality, small-radius witnesses inside minimal
//! improving sets, witnesses inside improving-set chains, and the distance
//! of residual improving sets to cluster borders. All are exhaustive and
//! exact on small instances; a counterexample to any of them is an
//! implementation bug.

use crate::algorithm::{Constants, RunResult, Schedule};
use crate::graph::{LabeledGraph, NodeId};
use crate::improving::{
    best_relabeling, improvement, ClusterSearch, ImprovingSequence, ImprovingSet, RelabelDelta,
    SearchBounds, SearchError,
};
use crate::lop::{Labeling, LopProblem};
use crate::rational::{rat_int, rat_to_f64, Rat};
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("run was not instrumented; enable clustering/labeling capture")]
    NotInstrumented,
    #[error("bad oracle input: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleConfig {
    /// Largest n for exhaustive subset enumeration.
    pub max_exhaustive_n: usize,
    pub samples: usize,
    pub seed: u64,
    pub relabel_cap: u128,
    /// Tolerance for statistical (not exact) assertions.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_exhaustive_n: 12,
            samples: 100,
            seed: 0,
            relabel_cap: 1 << 26,
            tolerance: 0.05,
        }
    }
}

/// The containment radii used by the border audit: t1 for the current
/// phase's border, t2 for earlier ones.
pub fn analysis_radii(schedule: &Schedule, constants: &Constants, radius: usize) -> (f64, f64) {
    let ln_f = rat_to_f64(schedule.ln_n);
    let eps_f = rat_to_f64(schedule.epsilon);
    let t1 = rat_to_f64(constants.c3) * ln_f / eps_f + 10.0 * (radius as f64 + 1.0);
    let t2 = rat_to_f64(constants.c2) * ln_f * ln_f / (eps_f * eps_f) + t1;
    (t1, t2)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InequalityCheck {
    pub lhs: Rat,
    pub rhs: Rat,
    pub holds: bool,
}

/// Best-relabel improvement of a whole set versus the sum over a split,
/// plus the interaction term 2 * degree^(2r-1) * |E(A,B)| * max improvement.
pub fn check_subset_inequality(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    s: &[NodeId],
    b: &[NodeId],
    cap: u128,
) -> Result<InequalityCheck, OracleError> {
    if !b.iter().all(|x| s.contains(x)) {
        return Err(OracleError::BadInput("split set must lie inside s".into()));
    }
    let a: Vec<NodeId> = s.iter().copied().filter(|x| !b.contains(x)).collect();
    let (_, imp_s) = best_relabeling(problem, g, l, s, cap)?;
    let (_, imp_a) = best_relabeling(problem, g, l, &a, cap)?;
    let (_, imp_b) = best_relabeling(problem, g, l, b, cap)?;
    let crossing = g
        .edges()
        .iter()
        .filter(|&&(u, v)| {
            (a.contains(&u) && b.contains(&v)) || (a.contains(&v) && b.contains(&u))
        })
        .count();
    let degree_pow = (problem.max_degree as i64).pow(2 * problem.radius as u32 - 1);
    let rhs = imp_a
        + imp_b
        + rat_int(2) * rat_int(degree_pow) * rat_int(crossing as i64) * problem.max_improvement;
    Ok(InequalityCheck {
        lhs: imp_s,
        rhs,
        holds: imp_s <= rhs,
    })
}

/// Every improving set over a small graph: each nonempty node subset with a
/// best relabeling that strictly drops the potential.
pub fn exhaustive_improving_sets(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    max_n: usize,
    cap: u128,
) -> Result<Vec<ImprovingSet>, OracleError> {
    let n = g.n();
    if n > max_n || n > 20 {
        return Err(SearchError::SearchSpaceTooLarge(1 << n.min(64), cap).into());
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let set: Vec<NodeId> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let (delta, imp) = best_relabeling(problem, g, l, &set, cap)?;
        if imp > Rat::zero() {
            let ratio = imp / rat_int(set.len() as i64);
            out.push(ImprovingSet {
                nodes: set,
                relabel: delta,
                improvement: imp,
                improving_ratio: ratio,
            });
        }
    }
    Ok(out)
}

/// Improving sets no proper subset of which achieves a strictly larger
/// ratio, found by the full subset table.
pub fn exhaustive_minimal_improving_sets(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    max_n: usize,
    cap: u128,
) -> Result<Vec<ImprovingSet>, OracleError> {
    let n = g.n();
    if n > max_n || n > 20 {
        return Err(SearchError::SearchSpaceTooLarge(1 << n.min(64), cap).into());
    }
    // ratio table over all subsets, indexed by bitmask
    let mut ratio = vec![Rat::zero(); 1 << n];
    let mut sets: Vec<Option<ImprovingSet>> = vec![None; 1 << n];
    for mask in 1u32..(1 << n) {
        let set: Vec<NodeId> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let (delta, imp) = best_relabeling(problem, g, l, &set, cap)?;
        let r = imp / rat_int(set.len() as i64);
        ratio[mask as usize] = r;
        if imp > Rat::zero() {
            sets[mask as usize] = Some(ImprovingSet {
                nodes: set,
                relabel: delta,
                improvement: imp,
                improving_ratio: r,
            });
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let Some(set) = sets[mask as usize].take() else {
            continue;
        };
        // iterate proper nonempty submasks
        let mut sub = (mask - 1) & mask;
        let mut minimal = true;
        while sub > 0 {
            if ratio[sub as usize] > set.improving_ratio {
                minimal = false;
                break;
            }
            sub = (sub - 1) & mask;
        }
        if minimal {
            out.push(set);
        }
    }
    Ok(out)
}

/// Grow a ball around v inside a minimal improving set until the restricted
/// relabeling reaches the set's ratio minus epsilon. Returns the subset and
/// the realized radius; existence is guaranteed because the full set is its
/// own witness.
pub fn find_local_witness(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    set: &ImprovingSet,
    v: NodeId,
    epsilon: Rat,
    cap: u128,
) -> Result<(Vec<NodeId>, usize), OracleError> {
    if !set.nodes.contains(&v) {
        return Err(OracleError::BadInput(format!("{v} is not in the set")));
    }
    if epsilon <= Rat::zero() || epsilon >= set.improving_ratio {
        return Err(SearchError::MinimalityPrereqFailed.into());
    }
    if !crate::improving::is_minimal(problem, g, l, set, cap)? {
        return Err(SearchError::MinimalityPrereqFailed.into());
    }
    let target = set.improving_ratio - epsilon;
    let dist = g.bfs_distances(v);
    let max_k = set
        .nodes
        .iter()
        .map(|&u| dist[u])
        .max()
        .expect("set is nonempty");
    for k in 0..=max_k {
        let subset: Vec<NodeId> = set
            .nodes
            .iter()
            .copied()
            .filter(|&u| dist[u] <= k)
            .collect();
        if subset.is_empty() {
            continue;
        }
        let delta = restrict_delta(&set.relabel, &subset);
        let imp = improvement(problem, g, l, &subset, &delta)?;
        if imp / rat_int(subset.len() as i64) >= target {
            return Ok((subset, k));
        }
    }
    unreachable!("the full set restricted to itself achieves its own ratio");
}

fn restrict_delta(delta: &RelabelDelta, subset: &[NodeId]) -> RelabelDelta {
    RelabelDelta {
        nodes: delta
            .nodes
            .iter()
            .copied()
            .filter(|(v, _)| subset.contains(v))
            .collect(),
        half_edges: delta
            .half_edges
            .iter()
            .copied()
            .filter(|((v, _), _)| subset.contains(v))
            .collect(),
    }
}

/// Replay a sequence from its base labeling and confirm each step is an
/// improving set with ratio at least the threshold.
pub fn validate_beta_sequence(
    problem: &LopProblem,
    g: &LabeledGraph,
    seq: &ImprovingSequence,
) -> bool {
    let mut l = seq.base.clone();
    for step in &seq.steps {
        match improvement(problem, g, &l, &step.nodes, &step.relabel) {
            Ok(imp) => {
                if imp != step.improvement
                    || imp < seq.threshold * rat_int(step.nodes.len() as i64)
                    || imp <= Rat::zero()
                {
                    return false;
                }
            }
            Err(_) => return false,
        }
        step.relabel.apply(&mut l);
    }
    l == seq.final_labeling
}

/// Search subsets of the union of a chain's sets, nearest to v first, for
/// one whose best relabeling w.r.t. the chain's base labeling achieves the
/// threshold minus epsilon. The whole union always qualifies, so this
/// terminates with a witness.
pub fn check_chain_witness(
    problem: &LopProblem,
    g: &LabeledGraph,
    seq: &ImprovingSequence,
    v: NodeId,
    epsilon: Rat,
    cap: u128,
) -> Result<(Vec<NodeId>, usize), OracleError> {
    if seq.steps.is_empty() {
        return Err(OracleError::BadInput("empty sequence".into()));
    }
    if !validate_beta_sequence(problem, g, seq) {
        return Err(OracleError::BadInput("not a valid improving sequence".into()));
    }
    if epsilon <= Rat::zero() || epsilon >= seq.threshold {
        return Err(SearchError::MinimalityPrereqFailed.into());
    }
    let mut union: Vec<NodeId> = seq
        .steps
        .iter()
        .flat_map(|s| s.nodes.iter().copied())
        .collect();
    union.sort_unstable();
    union.dedup();
    if !union.contains(&v) {
        return Err(OracleError::BadInput(format!("{v} is not in the chain")));
    }
    if union.len() > 20 {
        return Err(SearchError::SearchSpaceTooLarge(1 << union.len().min(64), cap).into());
    }
    let target = seq.threshold - epsilon;
    let dist = g.bfs_distances(v);
    // each subset is tested once, at its minimal enclosing radius
    let m = union.len();
    let mut masks: Vec<(usize, u32)> = (1u32..(1 << m))
        .map(|mask| {
            let k = (0..m)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| dist[union[i]])
                .max()
                .unwrap();
            (k, mask)
        })
        .collect();
    masks.sort_unstable();
    for (k, mask) in masks {
        let subset: Vec<NodeId> = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| union[i])
            .collect();
        let (_, imp) = best_relabeling(problem, g, &seq.base, &subset, cap)?;
        if imp / rat_int(subset.len() as i64) >= target {
            return Ok((subset, k));
        }
    }
    unreachable!("the full union improves by at least the threshold ratio");
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BorderReport {
    pub phase: usize,
    pub r_value: Rat,
    pub t1: f64,
    pub t2: f64,
    pub t1_vacuous: bool,
    pub t2_vacuous: bool,
    pub residual_sets: usize,
    pub border_empty: bool,
    pub contained: bool,
}

/// For every phase of an instrumented run, enumerate the residual improving
/// sets with ratio >= that phase's R and check their distance to the phase
/// borders. Radii beyond the graph size make the check vacuous, which the
/// report states explicitly.
pub fn border_distance_report(
    problem: &LopProblem,
    g: &LabeledGraph,
    result: &RunResult,
    constants: &Constants,
    schedule: &Schedule,
    size_cap: usize,
) -> Result<Vec<BorderReport>, OracleError> {
    let instr = result
        .instrumentation
        .as_ref()
        .ok_or(OracleError::NotInstrumented)?;
    let (t1, t2) = analysis_radii(schedule, constants, problem.radius);
    let n = g.n();
    let t1_vacuous = t1 >= n as f64;
    let t2_vacuous = t2 >= n as f64;
    let all_nodes: Vec<NodeId> = (0..n).collect();
    let mut reports = Vec::new();
    for (i, labeling) in instr.labelings_after_phase.iter().enumerate() {
        let r_value = instr.r_values[i];
        let bounds = SearchBounds {
            min_ratio: r_value,
            diameter_cap: schedule.diameter_cap,
            size_cap,
        };
        let mut engine = ClusterSearch::new(problem, g, labeling.clone(), &all_nodes, bounds);
        let residual = engine.collect_all();
        let mut contained = true;
        // distances to each border set up to phase i
        for (j, clustering) in instr.clusterings.iter().enumerate().take(i + 1) {
            let border = &clustering.border;
            let radius = if j == i { t1 } else { t2 };
            let vacuous = radius >= n as f64;
            if vacuous {
                continue;
            }
            if border.is_empty() {
                if !residual.is_empty() {
                    contained = false;
                }
                continue;
            }
            let dist = multi_source_distances(g, border);
            for set in &residual {
                if set
                    .nodes
                    .iter()
                    .any(|&u| dist[u] == usize::MAX || dist[u] as f64 > radius)
                {
                    contained = false;
                }
            }
        }
        reports.push(BorderReport {
            phase: i + 1,
            r_value,
            t1,
            t2,
            t1_vacuous,
            t2_vacuous,
            residual_sets: residual.len(),
            border_empty: instr.clusterings[i].border.is_empty(),
            contained,
        });
    }
    Ok(reports)
}

fn multi_source_distances(g: &LabeledGraph, sources: &[NodeId]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

/// A seeded connected graph of degree <= 3 with a random output labeling:
/// the sampling substrate for the oracle batteries.
pub fn random_small_instance(
    problem: &LopProblem,
    max_n: usize,
    seed: u64,
) -> (LabeledGraph, Labeling) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=max_n.max(4));
    let mut edges = Vec::new();
    let mut deg = vec![0usize; n];
    for v in 1..n {
        for _ in 0..50 {
            let u = rng.gen_range(0..v);
            if deg[u] < 3 && deg[v] < 3 {
                edges.push((u, v));
                deg[u] += 1;
                deg[v] += 1;
                break;
            }
        }
    }
    for _ in 0..n / 2 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let key = (u.min(v), u.max(v));
        if u != v && deg[u] < 3 && deg[v] < 3 && !edges.contains(&key) {
            edges.push(key);
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    let g = LabeledGraph::build(n, &edges).expect("sampled edges are simple");
    let l = Labeling::seeded_random(&g, problem, crate::seed::derive_seed(seed, 99));
    (g, l)
}

/// A random subset pair (s, b) with b inside s, for the inequality oracle.
pub fn random_split(g: &LabeledGraph, seed: u64) -> (Vec<NodeId>, Vec<NodeId>) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::seed::derive_seed(seed, 7));
    let s: Vec<NodeId> = (0..g.n()).filter(|_| rng.gen_bool(0.6)).collect();
    let b: Vec<NodeId> = s.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    (s, b)
}

//! Low-diameter clustering via exponential shifts: every node draws an
//! Exp(rho/2) shift, and each node joins the center minimizing
//! dist(u, v) - shift(u). Ties break toward the smaller center id so runs
//! are reproducible; clusters come out connected because the winning center
//! also wins along a shortest path.

use crate::graph::{LabeledGraph, NodeId};
use crate::seed::derive_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct MpxClustering {
    pub shifts: Vec<f64>,
    /// Center id per node.
    pub cluster_of: Vec<NodeId>,
    /// Center -> sorted member list. Iteration order is center-ascending.
    pub clusters: BTreeMap<NodeId, Vec<NodeId>>,
    /// Nodes with an edge into a different cluster, sorted.
    pub border: Vec<NodeId>,
    pub rho: f64,
    pub max_shift: f64,
}

impl MpxClustering {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster leaders are the centers themselves.
    pub fn leaders(&self) -> Vec<NodeId> {
        self.clusters.keys().copied().collect()
    }

    /// Rounds a message-passing implementation of the assignment needs:
    /// the sweep reaches as far as the largest shift.
    pub fn locality_rounds(&self) -> u64 {
        self.max_shift.ceil() as u64 + 1
    }
}

/// Independent Exp(rho/2) samples via inverse CDF on a seeded generator,
/// truncated at (40/rho) ln n.
pub fn draw_shifts(g: &LabeledGraph, rho: f64, seed: u64) -> Vec<f64> {
    assert!(rho > 0.0, "rho must be positive");
    let beta = rho / 2.0;
    let cutoff = 40.0 / rho * (g.n() as f64).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..g.n())
        .map(|_| {
            let u: f64 = rng.gen();
            (-(1.0 - u).ln() / beta).min(cutoff)
        })
        .collect()
}

#[derive(PartialEq)]
struct HeapEntry {
    key: f64,
    center: NodeId,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for smallest (key, center) first.
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.center.cmp(&self.center))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Assign every node to the center minimizing the shifted distance, by a
/// multi-source shortest-path sweep with per-node priority dist - shift.
pub fn assign_clusters(g: &LabeledGraph, shifts: &[f64]) -> MpxClustering {
    let n = g.n();
    assert_eq!(shifts.len(), n, "one shift per node");
    let mut best: Vec<(f64, NodeId)> = (0..n).map(|v| (-shifts[v], v)).collect();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for v in 0..n {
        heap.push(HeapEntry {
            key: -shifts[v],
            center: v,
            node: v,
        });
    }
    let mut cluster_of = vec![usize::MAX; n];
    while let Some(HeapEntry { key, center, node }) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        cluster_of[node] = center;
        for &w in g.neighbors(node) {
            if settled[w] {
                continue;
            }
            let cand = (key + 1.0, center);
            if cand.0 < best[w].0 || (cand.0 == best[w].0 && cand.1 < best[w].1) {
                best[w] = cand;
                heap.push(HeapEntry {
                    key: cand.0,
                    center,
                    node: w,
                });
            }
        }
    }
    let mut clusters: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for v in 0..n {
        clusters.entry(cluster_of[v]).or_default().push(v);
    }
    let border: Vec<NodeId> = (0..n)
        .filter(|&v| g.neighbors(v).iter().any(|&u| cluster_of[u] != cluster_of[v]))
        .collect();
    let max_shift = shifts.iter().copied().fold(0.0f64, f64::max);
    MpxClustering {
        shifts: shifts.to_vec(),
        cluster_of,
        clusters,
        border,
        rho: 0.0,
        max_shift,
    }
}

pub fn cluster_graph(g: &LabeledGraph, rho: f64, seed: u64) -> MpxClustering {
    let shifts = draw_shifts(g, rho, seed);
    let mut c = assign_clusters(g, &shifts);
    c.rho = rho;
    c
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QualityReport {
    pub cluster_count: usize,
    pub cut_edges: usize,
    pub edge_count: usize,
    pub cut_edge_fraction: f64,
    pub max_strong_diameter: usize,
    /// Max eccentricity of a center inside its own cluster.
    pub max_leader_radius: usize,
}

/// Max distance from `source` to members, inside the induced subgraph.
/// `scratch` must be n-sized and false everywhere except members.
fn cluster_ecc(
    g: &LabeledGraph,
    members: &[NodeId],
    source: NodeId,
    inside: &[bool],
    dist: &mut [usize],
) -> usize {
    for &m in members {
        dist[m] = usize::MAX;
    }
    dist[source] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(source);
    let mut ecc = 0;
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if inside[y] && dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                ecc = ecc.max(dist[y]);
                queue.push_back(y);
            }
        }
    }
    ecc
}

pub fn decomposition_quality(g: &LabeledGraph, clustering: &MpxClustering) -> QualityReport {
    let mut cut_edges = 0;
    for (u, v) in g.edges() {
        if clustering.cluster_of[u] != clustering.cluster_of[v] {
            cut_edges += 1;
        }
    }
    let mut max_diam = 0usize;
    let mut max_leader_radius = 0usize;
    let mut inside = vec![false; g.n()];
    let mut dist = vec![usize::MAX; g.n()];
    for (&center, members) in &clustering.clusters {
        for &m in members {
            inside[m] = true;
        }
        max_leader_radius =
            max_leader_radius.max(cluster_ecc(g, members, center, &inside, &mut dist));
        for &m in members {
            max_diam = max_diam.max(cluster_ecc(g, members, m, &inside, &mut dist));
        }
        for &m in members {
            inside[m] = false;
        }
    }
    let edge_count = g.edge_count();
    QualityReport {
        cluster_count: clustering.cluster_count(),
        cut_edges,
        edge_count,
        cut_edge_fraction: if edge_count == 0 {
            0.0
        } else {
            cut_edges as f64 / edge_count as f64
        },
        max_strong_diameter: max_diam,
        max_leader_radius,
    }
}

/// Per-node fraction of trials in which the radius-k ball stays inside one
/// cluster.
pub fn ball_containment_rate(
    g: &LabeledGraph,
    rho: f64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Vec<f64> {
    let balls: Vec<Vec<NodeId>> = (0..g.n()).map(|v| g.ball(v, k)).collect();
    let mut hits = vec![0usize; g.n()];
    for t in 0..trials {
        let clustering = cluster_graph(g, rho, derive_seed(seed, t as u64));
        for v in 0..g.n() {
            let c = clustering.cluster_of[v];
            if balls[v].iter().all(|&u| clustering.cluster_of[u] == c) {
                hits[v] += 1;
            }
        }
    }
    hits.iter().map(|&h| h as f64 / trials as f64).collect()
}

/// Empirical probability that the two smallest shifted distances to `node`
/// are within `c` of each other.
pub fn shift_gap_probability(
    g: &LabeledGraph,
    rho: f64,
    c: f64,
    trials: usize,
    seed: u64,
    node: NodeId,
) -> f64 {
    let dist = g.bfs_distances(node);
    let mut close = 0usize;
    for t in 0..trials {
        let shifts = draw_shifts(g, rho, derive_seed(seed, t as u64));
        let mut lo = f64::INFINITY;
        let mut second = f64::INFINITY;
        for u in 0..g.n() {
            if dist[u] == usize::MAX {
                continue;
            }
            let d = dist[u] as f64 - shifts[u];
            if d < lo {
                second = lo;
                lo = d;
            } else if d < second {
                second = d;
            }
        }
        if second - lo <= c {
            close += 1;
        }
    }
    close as f64 / trials as f64
}

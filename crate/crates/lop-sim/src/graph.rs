//! Simple undirected bounded-degree graphs with ports, half-edges,
//! distances, balls and induced centered subgraphs, plus generators.
//!
//! Topology is immutable after construction; output labels live in a
//! separate [`crate::lop::Labeling`] so phases can snapshot them cheaply.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use thiserror::Error;

pub type NodeId = usize;
pub type Label = i64;

/// The designated blank label used until a problem assigns real ones.
pub const BLANK: Label = 0;

/// A half-edge is addressed as (node, port); port p of v points at the
/// p-th neighbor in v's adjacency order (ports are 1-based in reports,
/// 0-based as indices here).
pub type HalfEdge = (NodeId, usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("node id {0} out of range (n = {1})")]
    IdOutOfRange(NodeId, usize),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
}

/// Distance with an explicit unreachable sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dist {
    Finite(usize),
    Infinite,
}

impl Dist {
    pub fn finite(self) -> Option<usize> {
        match self {
            Dist::Finite(d) => Some(d),
            Dist::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    n: usize,
    /// Per node, neighbors in port order (port i+1 = adj[v][i]).
    adj: Vec<Vec<NodeId>>,
    max_degree: usize,
    /// (input, output) label per node.
    pub node_labels: Vec<(Label, Label)>,
    /// (input, output) label per half-edge, indexed like `adj`.
    pub half_edge_labels: Vec<Vec<(Label, Label)>>,
}

impl LabeledGraph {
    /// Build from an edge list. Ports are assigned deterministically by
    /// sorted neighbor id; labels start blank.
    pub fn build(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::IdOutOfRange(u, n));
            }
            if v >= n {
                return Err(GraphError::IdOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if adj[u].contains(&v) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
        }
        let max_degree = adj.iter().map(|l| l.len()).max().unwrap_or(0);
        let node_labels = vec![(BLANK, BLANK); n];
        let half_edge_labels = adj.iter().map(|l| vec![(BLANK, BLANK); l.len()]).collect();
        Ok(LabeledGraph {
            n,
            adj,
            max_degree,
            node_labels,
            half_edge_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    /// Edges as (u, v) with u < v, in sorted order regardless of ports.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].contains(&v)
    }

    /// Port of v pointing at neighbor u (0-based index into `neighbors`).
    pub fn port_of(&self, v: NodeId, u: NodeId) -> Option<usize> {
        self.adj[v].iter().position(|&w| w == u)
    }

    /// Set an explicit port order per node. Callers must pass, for every
    /// node, a permutation of its neighbor set; half-edge labels move with
    /// their edges.
    pub fn set_ports(&mut self, ports: &[Vec<NodeId>]) {
        for (v, order) in ports.iter().enumerate() {
            let relabeled = order
                .iter()
                .map(|&u| {
                    let old = self.adj[v].iter().position(|&w| w == u).expect("valid port");
                    self.half_edge_labels[v][old]
                })
                .collect();
            self.half_edge_labels[v] = relabeled;
            self.adj[v] = order.clone();
        }
    }

    /// Reorder every node's ports with a seeded permutation. Topology and
    /// labels are preserved; only the port numbering changes.
    pub fn shuffle_ports(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in 0..self.n {
            let deg = self.adj[v].len();
            let mut perm: Vec<usize> = (0..deg).collect();
            perm.shuffle(&mut rng);
            self.adj[v] = perm.iter().map(|&i| self.adj[v][i]).collect();
            self.half_edge_labels[v] = perm.iter().map(|&i| self.half_edge_labels[v][i]).collect();
        }
    }

    /// Hop distance between u and v.
    pub fn distance(&self, u: NodeId, v: NodeId) -> Dist {
        if u == v {
            return Dist::Finite(0);
        }
        let mut seen = vec![false; self.n];
        seen[u] = true;
        let mut queue = VecDeque::new();
        queue.push_back((u, 0usize));
        while let Some((x, d)) = queue.pop_front() {
            for &y in &self.adj[x] {
                if !seen[y] {
                    if y == v {
                        return Dist::Finite(d + 1);
                    }
                    seen[y] = true;
                    queue.push_back((y, d + 1));
                }
            }
        }
        Dist::Infinite
    }

    /// BFS distances from v to every node (usize::MAX = unreachable).
    pub fn bfs_distances(&self, v: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[v] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(v);
        while let Some(x) = queue.pop_front() {
            for &y in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// All nodes at distance <= radius from v, sorted by id.
    pub fn ball(&self, v: NodeId, radius: usize) -> Vec<NodeId> {
        let mut dist = vec![usize::MAX; self.n];
        dist[v] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(v);
        let mut out = vec![v];
        while let Some(x) = queue.pop_front() {
            if dist[x] == radius {
                continue;
            }
            for &y in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    out.push(y);
                    queue.push_back(y);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Ball around a node set: nodes at distance <= radius from any seed.
    pub fn ball_of_set(&self, seeds: &[NodeId], radius: usize) -> Vec<NodeId> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        let mut out = Vec::new();
        for &s in seeds {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                out.push(s);
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            if dist[x] == radius {
                continue;
            }
            for &y in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    out.push(y);
                    queue.push_back(y);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// The induced view at v of radius r: all nodes within distance r,
    /// and all edges with at least one endpoint within distance r-1.
    pub fn centered_subgraph(&self, v: NodeId, r: usize) -> CenteredGraph {
        let dist = self.bfs_distances(v);
        let mut nodes: Vec<NodeId> = (0..self.n).filter(|&u| dist[u] <= r).collect();
        nodes.sort_unstable();
        let mut edges = Vec::new();
        for &u in &nodes {
            for &w in &self.adj[u] {
                if u < w && dist[w] <= r && (r > 0 && (dist[u] < r || dist[w] < r)) {
                    edges.push((u, w));
                }
            }
        }
        let node_labels = nodes.iter().map(|&u| self.node_labels[u]).collect();
        let half_edge_labels = nodes
            .iter()
            .map(|&u| {
                self.adj[u]
                    .iter()
                    .zip(&self.half_edge_labels[u])
                    .filter(|(w, _)| edges.contains(&(u.min(**w), u.max(**w))))
                    .map(|(_, lab)| *lab)
                    .collect()
            })
            .collect();
        CenteredGraph {
            center: v,
            radius: r,
            nodes,
            edges,
            node_labels,
            half_edge_labels,
        }
    }
}

/// A snapshot of the radius-r view around a center node. Labels are copies
/// of the parent labeling at snapshot time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenteredGraph {
    pub center: NodeId,
    pub radius: usize,
    /// Sorted parent-graph node ids.
    pub nodes: Vec<NodeId>,
    /// Edges (u, v) with u < v in parent ids.
    pub edges: Vec<(NodeId, NodeId)>,
    pub node_labels: Vec<(Label, Label)>,
    pub half_edge_labels: Vec<Vec<(Label, Label)>>,
}

impl CenteredGraph {
    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }
}

/// Built-in instance generators.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Cycle { n: usize },
    Path { n: usize },
    Grid { rows: usize, cols: usize },
    RandomRegular { n: usize, degree: usize, seed: u64 },
}

pub fn generate(kind: &GraphKind) -> Result<LabeledGraph, GraphError> {
    match *kind {
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(GraphError::InfeasibleParams(format!(
                    "cycle needs n >= 3, got {n}"
                )));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            LabeledGraph::build(n, &edges)
        }
        GraphKind::Path { n } => {
            if n < 1 {
                return Err(GraphError::InfeasibleParams("path needs n >= 1".into()));
            }
            let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            LabeledGraph::build(n, &edges)
        }
        GraphKind::Grid { rows, cols } => {
            if rows < 1 || cols < 1 {
                return Err(GraphError::InfeasibleParams(
                    "grid needs rows, cols >= 1".into(),
                ));
            }
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let id = r * cols + c;
                    if c + 1 < cols {
                        edges.push((id, id + 1));
                    }
                    if r + 1 < rows {
                        edges.push((id, id + cols));
                    }
                }
            }
            LabeledGraph::build(rows * cols, &edges)
        }
        GraphKind::RandomRegular { n, degree, seed } => random_regular(n, degree, seed),
    }
}

/// Seeded random d-regular graph via the pairing model with restarts.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<LabeledGraph, GraphError> {
    if !(n * degree).is_multiple_of(2) {
        return Err(GraphError::InfeasibleParams(format!(
            "n * degree must be even (n = {n}, degree = {degree})"
        )));
    }
    if degree >= n {
        return Err(GraphError::InfeasibleParams(format!(
            "degree {degree} must be < n = {n}"
        )));
    }
    if degree == 0 {
        return LabeledGraph::build(n, &[]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..10_000 {
        let mut stubs: Vec<NodeId> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(n * degree / 2);
        let mut seen = std::collections::HashSet::new();
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                continue 'attempt;
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                continue 'attempt;
            }
            edges.push(key);
        }
        return LabeledGraph::build(n, &edges);
    }
    Err(GraphError::InfeasibleParams(format!(
        "pairing model failed to produce a simple graph for n = {n}, degree = {degree}"
    )))
}

/// The Petersen graph: 3-regular, girth 5. Handy as a fixed test instance.
pub fn petersen() -> LabeledGraph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5)); // outer cycle
        edges.push((5 + i, 5 + (i + 2) % 5)); // inner pentagram
        edges.push((i, 5 + i)); // spokes
    }
    LabeledGraph::build(10, &edges).expect("petersen edges are valid")
}

/// Strong diameter of a node subset measured inside the induced subgraph.
/// Returns None if the induced subgraph is disconnected.
pub fn induced_diameter(g: &LabeledGraph, nodes: &[NodeId]) -> Option<usize> {
    if nodes.is_empty() {
        return Some(0);
    }
    let inside: std::collections::HashSet<NodeId> = nodes.iter().copied().collect();
    let mut best = 0;
    for &s in nodes {
        let mut dist = std::collections::HashMap::new();
        dist.insert(s, 0usize);
        let mut queue = VecDeque::new();
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            let dx = dist[&x];
            for &y in g.neighbors(x) {
                if inside.contains(&y) && !dist.contains_key(&y) {
                    dist.insert(y, dx + 1);
                    queue.push_back(y);
                }
            }
        }
        if dist.len() != nodes.len() {
            return None;
        }
        best = best.max(*dist.values().max().unwrap());
    }
    Some(best)
}

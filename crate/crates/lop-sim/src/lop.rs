//! Problem definitions: local potential Psi, total potential, the
//! no-local-improvement constraint, the two built-in problems and a
//! full-solution verifier.
//!
//! A node satisfies the constraint iff no relabeling of the node and its
//! incident half-edges strictly decreases both the node's own cost and the
//! potential summed over its radius-r ball. That single rule is executed
//! literally everywhere; problem structs only supply Psi and alphabets.

use crate::graph::{Label, LabeledGraph, NodeId};
use crate::rational::{rat, rat_int, Rat};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LopError {
    #[error("label {label} at node {node} is outside the output alphabet")]
    LabelOutOfAlphabet { node: NodeId, label: Label },
    #[error("infeasible problem parameters: {0}")]
    ProblemInfeasible(String),
    #[error("enumeration too large: {0} candidate views exceed cap {1}")]
    EnumerationTooLarge(u128, u128),
    #[error("graph max degree {got} exceeds problem degree bound {bound}")]
    DegreeExceedsProblem { got: usize, bound: usize },
}

/// Output labels for every node and half-edge. Input labels live on the
/// graph and are immutable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub node_out: Vec<Label>,
    pub half_edge_out: Vec<Vec<Label>>,
}

impl Labeling {
    /// Every node and half-edge gets the same output label.
    pub fn uniform(g: &LabeledGraph, node_label: Label, half_edge_label: Label) -> Self {
        Labeling {
            node_out: vec![node_label; g.n()],
            half_edge_out: (0..g.n())
                .map(|v| vec![half_edge_label; g.degree(v)])
                .collect(),
        }
    }

    /// Seeded uniform-random labels from the problem alphabets.
    pub fn seeded_random(g: &LabeledGraph, problem: &LopProblem, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let node_out = (0..g.n())
            .map(|_| problem.node_out_labels[rng.gen_range(0..problem.node_out_labels.len())])
            .collect();
        let half_edge_out = (0..g.n())
            .map(|v| {
                (0..g.degree(v))
                    .map(|_| {
                        problem.half_edge_out_labels
                            [rng.gen_range(0..problem.half_edge_out_labels.len())]
                    })
                    .collect()
            })
            .collect();
        Labeling {
            node_out,
            half_edge_out,
        }
    }
}

type PsiFn = Box<dyn Fn(&LabeledGraph, &Labeling, NodeId) -> i64 + Send + Sync>;

/// A problem given by its label alphabets, view radius, degree bound and a
/// local potential. `psi_scaled` returns Psi times `scale` as an integer so
/// all bookkeeping stays exact; the public accessors expose rationals.
pub struct LopProblem {
    pub name: String,
    pub radius: usize,
    pub max_degree: usize,
    pub node_in_labels: Vec<Label>,
    pub half_edge_in_labels: Vec<Label>,
    pub node_out_labels: Vec<Label>,
    pub half_edge_out_labels: Vec<Label>,
    /// Minimum single-center improvement over constraint-violating views.
    pub lambda: Rat,
    /// Maximum single-center improvement over constraint-violating views.
    pub max_improvement: Rat,
    /// All Psi values times `scale` are integers.
    pub scale: i64,
    psi: PsiFn,
}

impl std::fmt::Debug for LopProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LopProblem")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .field("max_degree", &self.max_degree)
            .field("lambda", &self.lambda)
            .field("max_improvement", &self.max_improvement)
            .finish()
    }
}

impl LopProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        radius: usize,
        max_degree: usize,
        node_out_labels: Vec<Label>,
        half_edge_out_labels: Vec<Label>,
        lambda: Rat,
        max_improvement: Rat,
        scale: i64,
        psi: PsiFn,
    ) -> Self {
        LopProblem {
            name: name.into(),
            radius,
            max_degree,
            node_in_labels: vec![0],
            half_edge_in_labels: vec![0],
            node_out_labels,
            half_edge_out_labels,
            lambda,
            max_improvement,
            scale,
            psi,
        }
    }

    /// Psi at v times `scale`, as an integer. Reads only the radius-r ball.
    pub fn psi_scaled(&self, g: &LabeledGraph, l: &Labeling, v: NodeId) -> i64 {
        (self.psi)(g, l, v)
    }

    pub fn check_degree(&self, g: &LabeledGraph) -> Result<(), LopError> {
        if g.max_degree() > self.max_degree {
            return Err(LopError::DegreeExceedsProblem {
                got: g.max_degree(),
                bound: self.max_degree,
            });
        }
        Ok(())
    }

    /// First labels of each output alphabet, the default initial labeling.
    pub fn first_labels(&self) -> (Label, Label) {
        (self.node_out_labels[0], self.half_edge_out_labels[0])
    }
}

pub fn validate_labeling(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
) -> Result<(), LopError> {
    for v in 0..g.n() {
        if !problem.node_out_labels.contains(&l.node_out[v]) {
            return Err(LopError::LabelOutOfAlphabet {
                node: v,
                label: l.node_out[v],
            });
        }
        for p in 0..g.degree(v) {
            if !problem.half_edge_out_labels.contains(&l.half_edge_out[v][p]) {
                return Err(LopError::LabelOutOfAlphabet {
                    node: v,
                    label: l.half_edge_out[v][p],
                });
            }
        }
    }
    Ok(())
}

/// Psi at v, checking the labels it reads.
pub fn node_potential(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &Labeling,
    v: NodeId,
) -> Result<Rat, LopError> {
    for u in g.ball(v, problem.radius) {
        if !problem.node_out_labels.contains(&l.node_out[u]) {
            return Err(LopError::LabelOutOfAlphabet {
                node: u,
                label: l.node_out[u],
            });
        }
    }
    Ok(rat(problem.psi_scaled(g, l, v), problem.scale))
}

pub fn total_potential_scaled(problem: &LopProblem, g: &LabeledGraph, l: &Labeling) -> i64 {
    (0..g.n()).map(|v| problem.psi_scaled(g, l, v)).sum()
}

pub fn total_potential(problem: &LopProblem, g: &LabeledGraph, l: &Labeling) -> Rat {
    rat(total_potential_scaled(problem, g, l), problem.scale)
}

pub(crate) struct CenterScan {
    /// Best relabel strictly decreasing both the center's cost and the ball
    /// potential (the constraint-violation witness), if any.
    pub best_fix: Option<(i64, Label, Vec<Label>)>,
    /// Best scaled potential drop over all center relabels, identity
    /// included (so always >= 0).
    pub best_drop_any: i64,
}

/// Scan every relabeling of the center v (node output + incident half-edge
/// outputs), measuring the scaled potential drop over the radius-r ball.
/// The labeling is restored before return.
pub(crate) fn center_scan(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &mut Labeling,
    v: NodeId,
) -> CenterScan {
    let ball = g.ball(v, problem.radius);
    let base_cost = problem.psi_scaled(g, l, v);
    let base_sum: i64 = ball.iter().map(|&u| problem.psi_scaled(g, l, u)).sum();
    let old_node = l.node_out[v];
    let old_he = l.half_edge_out[v].clone();
    let deg = g.degree(v);

    let mut best_fix: Option<(i64, Label, Vec<Label>)> = None;
    let mut best_drop_any = 0i64;
    let he_alpha = &problem.half_edge_out_labels;
    let mut he_choice = vec![0usize; deg];
    loop {
        for (p, &idx) in he_choice.iter().enumerate() {
            l.half_edge_out[v][p] = he_alpha[idx];
        }
        for &node_lab in &problem.node_out_labels {
            l.node_out[v] = node_lab;
            let cost = problem.psi_scaled(g, l, v);
            let sum: i64 = ball.iter().map(|&u| problem.psi_scaled(g, l, u)).sum();
            let drop = base_sum - sum;
            best_drop_any = best_drop_any.max(drop);
            if cost < base_cost
                && drop > 0
                && best_fix.as_ref().map(|(b, _, _)| drop > *b).unwrap_or(true)
            {
                best_fix = Some((drop, node_lab, l.half_edge_out[v].clone()));
            }
        }
        // mixed-radix odometer over the half-edge slots
        let mut p = 0;
        loop {
            if p == deg {
                l.node_out[v] = old_node;
                l.half_edge_out[v] = old_he;
                return CenterScan {
                    best_fix,
                    best_drop_any,
                };
            }
            he_choice[p] += 1;
            if he_choice[p] < he_alpha.len() {
                break;
            }
            he_choice[p] = 0;
            p += 1;
        }
    }
}

pub(crate) fn best_center_fix(
    problem: &LopProblem,
    g: &LabeledGraph,
    l: &mut Labeling,
    v: NodeId,
) -> Option<(i64, Label, Vec<Label>)> {
    center_scan(problem, g, l, v).best_fix
}

/// Whether the constraint holds at v: no center relabel strictly decreases
/// both the center's cost and the ball potential.
pub fn node_satisfies(problem: &LopProblem, g: &LabeledGraph, l: &Labeling, v: NodeId) -> bool {
    let mut scratch = l.clone();
    best_center_fix(problem, g, &mut scratch, v).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub violations: Vec<NodeId>,
}

pub fn verify_solution(problem: &LopProblem, g: &LabeledGraph, l: &Labeling) -> VerifyReport {
    let mut scratch = l.clone();
    let violations: Vec<NodeId> = (0..g.n())
        .filter(|&v| best_center_fix(problem, g, &mut scratch, v).is_some())
        .collect();
    VerifyReport {
        ok: violations.is_empty(),
        violations,
    }
}

pub fn count_unhappy(problem: &LopProblem, g: &LabeledGraph, l: &Labeling) -> usize {
    let mut scratch = l.clone();
    (0..g.n())
        .filter(|&v| best_center_fix(problem, g, &mut scratch, v).is_some())
        .count()
}

fn monochromatic_incident(g: &LabeledGraph, l: &Labeling, v: NodeId) -> i64 {
    g.neighbors(v)
        .iter()
        .filter(|&&u| l.node_out[u] == l.node_out[v])
        .count() as i64
}

/// Cut labels are {-1, +1}; Psi splits each monochromatic edge as 1/2 per
/// endpoint so the total potential equals the monochromatic edge count.
pub fn locally_optimal_cut(max_degree: usize) -> LopProblem {
    assert!(max_degree >= 1, "cut needs a degree bound >= 1");
    LopProblem::new(
        "cut",
        1,
        max_degree,
        vec![-1, 1],
        vec![0],
        rat_int(1),
        rat_int(max_degree as i64),
        2,
        Box::new(monochromatic_incident),
    )
}

/// c colors, defect bound d, degree bound max_degree; requires
/// c(d+1) > max_degree. Psi counts same-colored incident edges (halved per
/// endpoint), the mirror of counting properly colored edges.
pub fn defective_coloring(c: usize, d: usize, max_degree: usize) -> Result<LopProblem, LopError> {
    if c * (d + 1) <= max_degree {
        return Err(LopError::ProblemInfeasible(format!(
            "need c(d+1) > max degree, got {c}*({d}+1) <= {max_degree}"
        )));
    }
    Ok(LopProblem::new(
        format!("defective({c},{d})"),
        1,
        max_degree,
        (1..=c as Label).collect(),
        vec![0],
        rat_int(1),
        rat_int(max_degree as i64),
        2,
        Box::new(monochromatic_incident),
    ))
}

/// Defect of v: same-colored neighbors. Used to report defective-coloring
/// outputs independently of the constraint machinery.
pub fn defect(g: &LabeledGraph, l: &Labeling, v: NodeId) -> usize {
    g.neighbors(v)
        .iter()
        .filter(|&&u| l.node_out[u] == l.node_out[v])
        .count()
}

pub fn problem_by_name(
    name: &str,
    max_degree: usize,
    colors: Option<usize>,
    defect_bound: Option<usize>,
) -> Result<LopProblem, LopError> {
    match name {
        "cut" => Ok(locally_optimal_cut(max_degree)),
        "defective" => {
            let c = colors.ok_or_else(|| {
                LopError::ProblemInfeasible("defective needs a color count".into())
            })?;
            let d = defect_bound.ok_or_else(|| {
                LopError::ProblemInfeasible("defective needs a defect bound".into())
            })?;
            defective_coloring(c, d, max_degree)
        }
        other => Err(LopError::ProblemInfeasible(format!(
            "unknown problem {other:?}"
        ))),
    }
}

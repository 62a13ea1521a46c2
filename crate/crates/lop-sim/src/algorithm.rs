//! The phase loop: cluster, search each cluster for a maximal sequence of
//! R-improving sets, commit at a barrier, raise R, repeat. Ends with a full
//! verification pass and an optional retry / sequential-fallback policy.

use crate::baseline::{sequential_fix, FixPolicy};
use crate::graph::{LabeledGraph, NodeId};
use crate::improving::{ClusterSearch, ImprovingSequence, SearchBounds};
use crate::lop::{
    count_unhappy, total_potential, total_potential_scaled, verify_solution, Labeling, LopError,
    LopProblem,
};
use crate::mpx::{cluster_graph, decomposition_quality, MpxClustering};
use crate::rational::{ln_fixed, rat, rat_int, rat_to_f64, Rat};
use crate::seed::derive_seed;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// The literal parameter formulas. At practical sizes the clustering
    /// collapses to one cluster; useful for round-accounting sweeps.
    PaperFormulas,
    /// Calibrated rho and phase policy so the clustering is a nontrivial
    /// partition at small n. The schedule's structure is unchanged.
    DeskScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLabeling {
    /// Lexicographically-first output label everywhere.
    First,
    /// Seeded uniform choice per node and half-edge.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    Sequential,
}

/// The schedule constants. c1 feeds the exact rational schedule; the others
/// only shape rho and the diameter cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c: Rat,
    pub c1: Rat,
    pub c2: Rat,
    pub c3: Rat,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: rat_int(2),
            c1: rat_int(2),
            c2: rat_int(1),
            c3: rat_int(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmConfig {
    pub mode: ScaleMode,
    pub constants: Constants,
    pub size_cap: usize,
    /// Override the phase count (defaults to ceil(c1 ln n)).
    pub phase_count: Option<usize>,
    pub retry_limit: usize,
    pub fallback: Fallback,
    pub initial_labeling: InitialLabeling,
    pub seed: u64,
    /// Stop early once a phase ends with zero violations. Defaults by mode
    /// (on for desk scale, off for the literal formulas).
    pub early_stop_on_verified: Option<bool>,
    pub workers: usize,
    /// Keep per-phase clusterings and labeling snapshots for audits.
    pub instrument: bool,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            mode: ScaleMode::DeskScale,
            constants: Constants::default(),
            size_cap: 6,
            phase_count: None,
            retry_limit: 2,
            fallback: Fallback::Sequential,
            initial_labeling: InitialLabeling::First,
            seed: 0,
            early_stop_on_verified: None,
            workers: 1,
            instrument: false,
        }
    }
}

impl AlgorithmConfig {
    pub fn early_stop(&self) -> bool {
        self.early_stop_on_verified
            .unwrap_or(matches!(self.mode, ScaleMode::DeskScale))
    }
}

/// Derived per-run parameters. epsilon and the R schedule are exact
/// rationals (with ln n fixed at microlevel precision); rho is the only
/// float, feeding the shift sampler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub ln_n: Rat,
    pub epsilon: Rat,
    pub rho: f64,
    pub phase_count: usize,
    pub diameter_cap: usize,
    pub r_start: Rat,
    pub r_step: Rat,
}

impl Schedule {
    pub fn derive(problem: &LopProblem, n: usize, config: &AlgorithmConfig) -> Schedule {
        let ln_n = ln_fixed(n.max(2));
        let lambda = problem.lambda;
        let k = &config.constants;
        let epsilon = lambda / (rat_int(100) * k.c1 * ln_n);
        let r_start = lambda / rat_int(4);
        let r_step = lambda / (rat_int(20) * k.c1 * ln_n);
        let eps_f = rat_to_f64(epsilon);
        let ln_f = rat_to_f64(ln_n);
        let rho = match config.mode {
            ScaleMode::PaperFormulas => {
                (10.0 * rat_to_f64(k.c2) * eps_f * eps_f / (rat_to_f64(k.c) * ln_f * ln_f))
                    .max(1e-12)
            }
            ScaleMode::DeskScale => (4.0 / (n.max(2) as f64).sqrt()).clamp(0.02, 0.75),
        };
        let diameter_cap = (rat_to_f64(k.c3) * ln_f / eps_f).ceil() as usize;
        // R stays within 3 lambda / 4 across all phases
        let max_phases = (rat_int(10) * k.c1 * ln_n).to_f64().unwrap_or(1.0).floor() as usize;
        let default_phases = {
            let target = k.c1 * ln_n;
            let ceil = (target.numer() + target.denom() - 1).div_euclid(*target.denom());
            ceil.max(1) as usize
        };
        let phase_count = config
            .phase_count
            .unwrap_or(default_phases)
            .clamp(1, max_phases.max(1));
        Schedule {
            ln_n,
            epsilon,
            rho,
            phase_count,
            diameter_cap,
            r_start,
            r_step,
        }
    }

    /// R for a 1-based phase index.
    pub fn r_value(&self, phase: usize) -> Rat {
        self.r_start + rat_int(phase as i64 - 1) * self.r_step
    }
}

/// Desk-scale parameters for a given n and minimum improving ratio, with
/// default constants.
pub fn desk_scale_parameters(n: usize, lambda: Rat) -> Schedule {
    let mut dummy = crate::lop::locally_optimal_cut(3);
    dummy.lambda = lambda;
    Schedule::derive(
        &dummy,
        n,
        &AlgorithmConfig {
            mode: ScaleMode::DeskScale,
            ..AlgorithmConfig::default()
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub attempt: usize,
    pub phase: usize,
    pub r_value: Rat,
    pub epsilon: Rat,
    pub rho: f64,
    pub cluster_count: usize,
    pub max_cluster_diameter: usize,
    pub border_size: usize,
    pub sets_applied: usize,
    pub total_improvement: Rat,
    pub pot_before: Rat,
    pub pot_after: Rat,
    pub unhappy_after: usize,
    pub max_shift: f64,
    pub max_leader_radius: usize,
    pub rounds: u64,
    /// (|A|, improvement) per committed set, cluster order then step order.
    pub sets: Vec<(usize, Rat)>,
}

impl PhaseRecord {
    /// Round accounting: the clustering sweep, a gather to the leader, a
    /// broadcast back, and constant overhead.
    pub fn simulated_rounds(&self) -> u64 {
        (self.max_shift.ceil() as u64 + 1) + 2 * self.max_leader_radius as u64 + 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub format_version: u32,
    pub n: usize,
    pub problem: String,
    pub mode: ScaleMode,
    pub seed: u64,
    pub lambda: Rat,
    pub epsilon: Rat,
    pub rho: f64,
    pub phase_count_planned: usize,
    pub size_cap: usize,
    pub diameter_cap: usize,
    pub phases: Vec<PhaseRecord>,
    pub attempts: usize,
    pub early_stop: bool,
    pub fallback_used: bool,
    pub fallback_flips: Option<usize>,
    pub verified: bool,
    pub violations: Vec<NodeId>,
    pub pot_initial: Rat,
    pub pot_final: Rat,
    pub total_rounds: u64,
}

impl RunTrace {
    /// One CSV row per phase; rationals rendered as decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "attempt,phase,r_value,epsilon,rho,cluster_count,max_cluster_diameter,border_size,\
             sets_applied,total_improvement,pot_before,pot_after,unhappy_after,max_shift,\
             max_leader_radius,rounds\n",
        );
        for p in &self.phases {
            out.push_str(&format!(
                "{},{},{:.9},{:.9},{:.9},{},{},{},{},{:.9},{:.9},{:.9},{},{:.3},{},{}\n",
                p.attempt,
                p.phase,
                rat_to_f64(p.r_value),
                rat_to_f64(p.epsilon),
                p.rho,
                p.cluster_count,
                p.max_cluster_diameter,
                p.border_size,
                p.sets_applied,
                rat_to_f64(p.total_improvement),
                rat_to_f64(p.pot_before),
                rat_to_f64(p.pot_after),
                p.unhappy_after,
                p.max_shift,
                p.max_leader_radius,
                p.rounds,
            ));
        }
        out
    }
}

/// Per-phase snapshots for the audit tooling.
#[derive(Debug, Clone)]
pub struct Instrumentation {
    pub clusterings: Vec<MpxClustering>,
    pub labelings_after_phase: Vec<Labeling>,
    pub r_values: Vec<Rat>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub labeling: Labeling,
    pub trace: RunTrace,
    pub verified: bool,
    pub instrumentation: Option<Instrumentation>,
}

fn initial_labeling(
    problem: &LopProblem,
    g: &LabeledGraph,
    config: &AlgorithmConfig,
) -> Labeling {
    match config.initial_labeling {
        InitialLabeling::First => {
            let (nl, hl) = problem.first_labels();
            Labeling::uniform(g, nl, hl)
        }
        InitialLabeling::Random => {
            Labeling::seeded_random(g, problem, derive_seed(config.seed, 0x1ab))
        }
    }
}

fn run_clusters(
    problem: &LopProblem,
    g: &LabeledGraph,
    labeling: &Labeling,
    clusters: &[(NodeId, Vec<NodeId>)],
    bounds: SearchBounds,
    workers: usize,
) -> Vec<ImprovingSequence> {
    if workers <= 1 || clusters.len() <= 1 {
        return clusters
            .iter()
            .map(|(_, members)| {
                ClusterSearch::new(problem, g, labeling.clone(), members, bounds).run_maximal()
            })
            .collect();
    }
    let slots: Vec<std::sync::Mutex<Option<ImprovingSequence>>> =
        clusters.iter().map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(clusters.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= clusters.len() {
                    break;
                }
                let seq =
                    ClusterSearch::new(problem, g, labeling.clone(), &clusters[i].1, bounds)
                        .run_maximal();
                *slots[i].lock().unwrap() = Some(seq);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("all clusters ran"))
        .collect()
}

/// Run the full algorithm on a graph. The result's labeling verifies iff
/// `verified` (always true when the sequential fallback is enabled).
pub fn run(
    g: &LabeledGraph,
    problem: &LopProblem,
    config: &AlgorithmConfig,
) -> Result<RunResult, LopError> {
    problem.check_degree(g)?;
    let schedule = Schedule::derive(problem, g.n(), config);
    let early_stop_enabled = config.early_stop();

    let mut phases: Vec<PhaseRecord> = Vec::new();
    let mut final_labeling: Option<Labeling> = None;
    let mut verified = false;
    let mut early_stop = false;
    let mut attempts_used = 0;
    let mut instrumentation = None;
    let pot_initial = total_potential(problem, g, &initial_labeling(problem, g, config));

    for attempt in 0..=config.retry_limit {
        attempts_used = attempt + 1;
        let attempt_seed = derive_seed(config.seed, attempt as u64);
        let mut labeling = initial_labeling(problem, g, config);
        let mut pot_scaled = total_potential_scaled(problem, g, &labeling);
        early_stop = false;
        let mut instr = config.instrument.then(|| Instrumentation {
            clusterings: Vec::new(),
            labelings_after_phase: Vec::new(),
            r_values: Vec::new(),
        });

        for phase in 1..=schedule.phase_count {
            let r_value = schedule.r_value(phase);
            let clustering = cluster_graph(g, schedule.rho, derive_seed(attempt_seed, phase as u64));
            let quality = decomposition_quality(g, &clustering);
            let clusters: Vec<(NodeId, Vec<NodeId>)> = clustering
                .clusters
                .iter()
                .map(|(&c, m)| (c, m.clone()))
                .collect();
            let bounds = SearchBounds {
                min_ratio: r_value,
                diameter_cap: schedule.diameter_cap,
                size_cap: config.size_cap,
            };
            let sequences = run_clusters(problem, g, &labeling, &clusters, bounds, config.workers);

            // Barrier: different clusters must touch disjoint nodes.
            let mut touched = vec![false; g.n()];
            for seq in &sequences {
                let mut mine = std::collections::BTreeSet::new();
                for step in &seq.steps {
                    for &v in &step.nodes {
                        mine.insert(v);
                    }
                }
                for v in mine {
                    assert!(
                        !touched[v],
                        "phase barrier violated: node {v} relabeled by two clusters"
                    );
                    touched[v] = true;
                }
            }

            let mut sets = Vec::new();
            let mut improvement_scaled: i64 = 0;
            for seq in &sequences {
                for step in &seq.steps {
                    step.relabel.apply(&mut labeling);
                    sets.push((step.nodes.len(), step.improvement));
                    improvement_scaled +=
                        (step.improvement * rat_int(problem.scale)).to_integer();
                }
            }
            let pot_before = rat(pot_scaled, problem.scale);
            pot_scaled -= improvement_scaled;
            debug_assert_eq!(
                pot_scaled,
                total_potential_scaled(problem, g, &labeling),
                "bookkeeping must match recomputed potential"
            );
            let pot_after = rat(pot_scaled, problem.scale);
            let unhappy_after = count_unhappy(problem, g, &labeling);
            let mut record = PhaseRecord {
                attempt,
                phase,
                r_value,
                epsilon: schedule.epsilon,
                rho: schedule.rho,
                cluster_count: quality.cluster_count,
                max_cluster_diameter: quality.max_strong_diameter,
                border_size: clustering.border.len(),
                sets_applied: sets.len(),
                total_improvement: rat(improvement_scaled, problem.scale),
                pot_before,
                pot_after,
                unhappy_after,
                max_shift: clustering.max_shift,
                max_leader_radius: quality.max_leader_radius,
                rounds: 0,
                sets,
            };
            record.rounds = record.simulated_rounds();
            phases.push(record);
            if let Some(instr) = instr.as_mut() {
                instr.clusterings.push(clustering);
                instr.labelings_after_phase.push(labeling.clone());
                instr.r_values.push(r_value);
            }
            if early_stop_enabled && unhappy_after == 0 {
                early_stop = true;
                break;
            }
        }

        let report = verify_solution(problem, g, &labeling);
        final_labeling = Some(labeling);
        instrumentation = instr;
        if report.ok {
            verified = true;
            break;
        }
    }

    let mut labeling = final_labeling.expect("at least one attempt ran");
    let mut fallback_used = false;
    let mut fallback_flips = None;
    if !verified && matches!(config.fallback, Fallback::Sequential) {
        let (fixed, trace) = sequential_fix(problem, g, &labeling, FixPolicy::LowestId);
        labeling = fixed;
        fallback_used = true;
        fallback_flips = Some(trace.flips());
    }
    let report = verify_solution(problem, g, &labeling);
    let pot_final = total_potential(problem, g, &labeling);
    let total_rounds = phases.iter().map(|p| p.rounds).sum();
    let trace = RunTrace {
        format_version: 1,
        n: g.n(),
        problem: problem.name.clone(),
        mode: config.mode,
        seed: config.seed,
        lambda: problem.lambda,
        epsilon: schedule.epsilon,
        rho: schedule.rho,
        phase_count_planned: schedule.phase_count,
        size_cap: config.size_cap,
        diameter_cap: schedule.diameter_cap,
        phases,
        attempts: attempts_used,
        early_stop,
        fallback_used,
        fallback_flips,
        verified: report.ok,
        violations: report.violations.clone(),
        pot_initial,
        pot_final,
        total_rounds,
    };
    Ok(RunResult {
        labeling,
        trace,
        verified: report.ok,
        instrumentation,
    })
}

/// Exit-status mapping shared by the binaries: 0 verified, 2 unverified,
/// 3 verified only through the fallback.
pub fn exit_code(result: &RunResult) -> i32 {
    if !result.verified {
        2
    } else if result.trace.fallback_used {
        3
    } else {
        0
    }
}

pub fn potential_is_monotone(trace: &RunTrace) -> bool {
    let mut prev: Option<Rat> = None;
    for p in &trace.phases {
        if p.attempt != trace.attempts - 1 {
            continue;
        }
        if let Some(prev) = prev {
            if p.pot_before != prev {
                return false;
            }
        }
        if p.pot_after > p.pot_before {
            return false;
        }
        if (p.pot_before - p.pot_after) != p.total_improvement {
            return false;
        }
        if p.total_improvement.is_negative() {
            return false;
        }
        prev = Some(p.pot_after);
    }
    true
}

/// Check every committed set dropped the potential by at least R |A| and
/// that the R schedule matches start + (i-1) step exactly.
pub fn schedule_is_exact(trace: &RunTrace, schedule: &Schedule) -> bool {
    for p in &trace.phases {
        if p.r_value != schedule.r_value(p.phase) {
            return false;
        }
        for &(size, imp) in &p.sets {
            if imp < p.r_value * rat_int(size as i64) {
                return false;
            }
            if imp <= Rat::zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::lop::locally_optimal_cut;

    #[test]
    fn schedule_r_values_are_exact() {
        let p = locally_optimal_cut(3);
        let config = AlgorithmConfig::default();
        let s = Schedule::derive(&p, 64, &config);
        assert_eq!(s.r_value(1), p.lambda / rat_int(4));
        assert_eq!(s.r_value(3), s.r_value(1) + rat_int(2) * s.r_step);
        // bounded by 3 lambda / 4 after the final phase
        let after_last = s.r_value(s.phase_count) + s.r_step;
        assert!(after_last <= rat(3, 4) * p.lambda);
    }

    #[test]
    fn two_node_path_verifies_in_one_phase() {
        let g = generate(&GraphKind::Path { n: 2 }).unwrap();
        let p = locally_optimal_cut(3);
        let config = AlgorithmConfig {
            retry_limit: 0,
            fallback: Fallback::None,
            seed: 1,
            ..AlgorithmConfig::default()
        };
        let result = run(&g, &p, &config).unwrap();
        assert!(result.verified);
        assert_eq!(result.trace.pot_final, rat_int(0));
        let fixing_phase = result
            .trace
            .phases
            .iter()
            .find(|ph| ph.sets_applied > 0)
            .expect("some phase fixed the pair");
        assert_eq!(fixing_phase.phase, 1);
    }

    #[test]
    fn even_cycle_reaches_local_optimum() {
        let g = generate(&GraphKind::Cycle { n: 16 }).unwrap();
        let p = locally_optimal_cut(2);
        let config = AlgorithmConfig {
            seed: 5,
            fallback: Fallback::None,
            ..AlgorithmConfig::default()
        };
        let result = run(&g, &p, &config).unwrap();
        assert!(result.verified);
        assert!(potential_is_monotone(&result.trace));
        let s = Schedule::derive(&p, 16, &config);
        assert!(schedule_is_exact(&result.trace, &s));
    }

    #[test]
    fn identical_seeds_reproduce_traces() {
        let g = crate::graph::random_regular(40, 3, 2).unwrap();
        let p = locally_optimal_cut(3);
        let config = AlgorithmConfig {
            seed: 11,
            ..AlgorithmConfig::default()
        };
        let a = run(&g, &p, &config).unwrap();
        let b = run(&g, &p, &config).unwrap();
        assert_eq!(a.labeling, b.labeling);
        assert_eq!(format!("{:?}", a.trace), format!("{:?}", b.trace));
    }

    #[test]
    fn degree_bound_checked() {
        let g = generate(&GraphKind::Grid { rows: 3, cols: 3 }).unwrap();
        let p = locally_optimal_cut(3); // grid has degree 4
        assert!(matches!(
            run(&g, &p, &AlgorithmConfig::default()),
            Err(LopError::DegreeExceedsProblem { got: 4, bound: 3 })
        ));
    }
}

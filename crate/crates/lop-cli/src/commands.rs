use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lop_sim::algorithm::{self, AlgorithmConfig, Fallback, RunResult};
use lop_sim::analysis::{self, OracleConfig};
use lop_sim::baseline::{sequential_fix, FixPolicy, FixTrace};
use lop_sim::graph::{GraphKind, LabeledGraph};
use lop_sim::improving::SearchBounds;
use lop_sim::lop::{problem_by_name, Labeling, LopProblem};
use lop_sim::rational::rat_to_f64;
use lop_sim::seed::derive_seed;
use lop_sim::{io as gio, generate, verify_solution};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::independent_verify::independent_violations;

#[derive(Parser)]
#[command(
    name = "lop",
    about = "Local-search labeling simulator: generate instances, run the clustered algorithm, verify, audit, sweep",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Write a generated graph to a file (.json or edge-list text).
    Generate(GenerateArgs),
    /// Run the clustered phase algorithm on one graph.
    Run(RunArgs),
    /// Run the sequential fixer on one graph.
    Baseline(BaselineArgs),
    /// Check a labeling file against a problem; exits nonzero on violations.
    Verify(VerifyArgs),
    /// Run the brute-force analysis oracles and emit a JSON report.
    Audit(AuditArgs),
    /// Run an (n x seed) grid from a spec file and aggregate a CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// cycle | path | grid | random_regular
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optionally renumber every node's ports with this seed.
    #[arg(long)]
    shuffle_ports: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
pub struct ProblemArgs {
    /// cut | defective
    #[arg(long, default_value = "cut")]
    problem: String,
    /// Degree bound of the problem (defaults to the graph's max degree).
    #[arg(long)]
    degree: Option<usize>,
    /// Colors for the defective problem.
    #[arg(long)]
    colors: Option<usize>,
    /// Defect bound for the defective problem.
    #[arg(long)]
    defect: Option<usize>,
}

impl ProblemArgs {
    fn build(&self, g: &LabeledGraph) -> Result<LopProblem> {
        let degree = self.degree.unwrap_or_else(|| g.max_degree());
        Ok(problem_by_name(
            &self.problem,
            degree,
            self.colors,
            self.defect,
        )?)
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Experiment spec file; flags below override nothing when present.
    #[arg(long, conflicts_with = "graph")]
    spec: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// desk_scale | paper_formulas
    #[arg(long, default_value = "desk_scale")]
    mode: String,
    #[arg(long, default_value_t = 2)]
    retry_limit: usize,
    /// none | sequential
    #[arg(long, default_value = "sequential")]
    fallback: String,
    #[arg(long)]
    phase_count: Option<usize>,
    #[arg(long, default_value_t = 6)]
    size_cap: usize,
    /// Write per-phase clustering dumps next to the trace.
    #[arg(long)]
    dump_clusterings: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
    /// lowest_id | random
    #[arg(long, default_value = "lowest_id")]
    policy: String,
    #[arg(long, default_value_t = 0)]
    policy_seed: u64,
    /// Start from this labeling file instead of the uniform first label.
    #[arg(long)]
    labeling: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    labeling: PathBuf,
}

#[derive(Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// Graph source in spec files: a generator or a file path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { file: PathBuf },
    Generated(GraphKind),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<usize>,
}

impl ProblemSpec {
    fn build(&self) -> Result<LopProblem> {
        Ok(problem_by_name(
            &self.name,
            self.degree,
            self.colors,
            self.defect,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub graph: GraphSource,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_format_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    /// cycle | path | random_regular (grid would need two dimensions)
    pub kind: String,
    #[serde(default)]
    pub degree: usize,
    pub n_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
}

pub fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<i32> {
    let kind = match args.kind.as_str() {
        "cycle" => GraphKind::Cycle {
            n: args.n.context("--n is required for cycle")?,
        },
        "path" => GraphKind::Path {
            n: args.n.context("--n is required for path")?,
        },
        "grid" => GraphKind::Grid {
            rows: args.rows.context("--rows is required for grid")?,
            cols: args.cols.context("--cols is required for grid")?,
        },
        "random_regular" => GraphKind::RandomRegular {
            n: args.n.context("--n is required for random_regular")?,
            degree: args.degree.context("--degree is required for random_regular")?,
            seed: args.seed,
        },
        other => bail!("unknown graph kind {other:?}"),
    };
    let mut g = generate(&kind)?;
    if let Some(seed) = args.shuffle_ports {
        g.shuffle_ports(seed);
    }
    if args.out.extension().map(|e| e == "json").unwrap_or(false) {
        gio::save_graph(&g, &args.out)?;
    } else {
        std::fs::write(&args.out, gio::graph_to_edge_list(&g))?;
    }
    println!(
        "wrote {} ({} nodes, {} edges)",
        args.out.display(),
        g.n(),
        g.edge_count()
    );
    Ok(0)
}

fn algorithm_config_from_flags(args: &RunArgs) -> Result<AlgorithmConfig> {
    let mode = match args.mode.as_str() {
        "desk_scale" => algorithm::ScaleMode::DeskScale,
        "paper_formulas" => algorithm::ScaleMode::PaperFormulas,
        other => bail!("unknown mode {other:?}"),
    };
    let fallback = match args.fallback.as_str() {
        "none" => Fallback::None,
        "sequential" => Fallback::Sequential,
        other => bail!("unknown fallback {other:?}"),
    };
    Ok(AlgorithmConfig {
        mode,
        seed: args.seed,
        retry_limit: args.retry_limit,
        fallback,
        phase_count: args.phase_count,
        size_cap: args.size_cap,
        instrument: args.dump_clusterings,
        ..AlgorithmConfig::default()
    })
}

fn workers_from_env() -> usize {
    std::env::var("LOP_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

fn write_run_outputs(
    out_dir: &Path,
    tag: &str,
    g: &LabeledGraph,
    problem: &LopProblem,
    result: &RunResult,
    dump_clusterings: bool,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    gio::save_labeling(g, problem, &result.labeling, &out_dir.join(format!("labeling_{tag}.json")))?;
    std::fs::write(
        out_dir.join(format!("trace_{tag}.csv")),
        result.trace.to_csv(),
    )?;
    let mut summary = serde_json::to_string(&result.trace)?;
    summary.push('\n');
    std::fs::write(out_dir.join(format!("summary_{tag}.json")), summary)?;
    if dump_clusterings {
        if let Some(instr) = &result.instrumentation {
            for (i, clustering) in instr.clusterings.iter().enumerate() {
                let mut nodes = serde_json::Map::new();
                for v in 0..g.n() {
                    nodes.insert(
                        v.to_string(),
                        serde_json::json!({
                            "cluster": clustering.cluster_of[v],
                            "shift": clustering.shifts[v],
                        }),
                    );
                }
                let quality = lop_sim::mpx::decomposition_quality(g, clustering);
                let dump = serde_json::json!({
                    "phase": i + 1,
                    "nodes": nodes,
                    "quality": quality,
                });
                let mut text = serde_json::to_string(&dump)?;
                text.push('\n');
                std::fs::write(
                    out_dir.join(format!("clustering_{tag}_phase{}.json", i + 1)),
                    text,
                )?;
            }
        }
    }
    Ok(())
}

fn run_one(
    g: &LabeledGraph,
    problem: &LopProblem,
    config: &AlgorithmConfig,
    out_dir: &Path,
    tag: &str,
    dump_clusterings: bool,
) -> Result<i32> {
    let result = algorithm::run(g, problem, config)?;
    write_run_outputs(out_dir, tag, g, problem, &result, dump_clusterings)?;
    println!(
        "seed {}: verified={} fallback={} phases={} rounds={} pot {}->{}",
        config.seed,
        result.verified,
        result.trace.fallback_used,
        result.trace.phases.len(),
        result.trace.total_rounds,
        rat_to_f64(result.trace.pot_initial),
        rat_to_f64(result.trace.pot_final),
    );
    Ok(algorithm::exit_code(&result))
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let workers = workers_from_env();
    if let Some(spec_path) = &args.spec {
        let text = std::fs::read_to_string(spec_path)
            .with_context(|| format!("reading {}", spec_path.display()))?;
        let spec: ExperimentSpec = serde_json::from_str(&text)?;
        let g = load_source(&spec.graph)?;
        let problem = spec.problem.build()?;
        let out_dir = spec.output_dir.clone().unwrap_or_else(|| args.out_dir.clone());
        let seeds = if spec.seeds.is_empty() {
            vec![spec.algorithm.seed]
        } else {
            spec.seeds.clone()
        };
        let mut worst = 0;
        for seed in seeds {
            let config = AlgorithmConfig {
                seed,
                workers,
                instrument: spec.algorithm.instrument || args.dump_clusterings,
                ..spec.algorithm.clone()
            };
            let code = run_one(
                &g,
                &problem,
                &config,
                &out_dir,
                &format!("seed{seed}"),
                args.dump_clusterings,
            )?;
            worst = worst_code(worst, code);
        }
        return Ok(worst);
    }
    let graph_path = args
        .graph
        .as_ref()
        .context("either --spec or --graph is required")?;
    let g = gio::load_graph(graph_path)?;
    let problem = args.problem.build(&g)?;
    let mut config = algorithm_config_from_flags(&args)?;
    config.workers = workers;
    run_one(
        &g,
        &problem,
        &config,
        &args.out_dir,
        &format!("seed{}", args.seed),
        args.dump_clusterings,
    )
}

fn worst_code(a: i32, b: i32) -> i32 {
    // severity order: 0 < 3 < 2
    let rank = |c| match c {
        0 => 0,
        3 => 1,
        _ => 2,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn load_source(source: &GraphSource) -> Result<LabeledGraph> {
    match source {
        GraphSource::File { file } => Ok(gio::load_graph(file)?),
        GraphSource::Generated(kind) => Ok(generate(kind)?),
    }
}

fn fix_trace_csv(trace: &FixTrace) -> String {
    let mut out = String::from("step,node,old_label,new_label,pot_before,pot_after\n");
    for (i, s) in trace.steps.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{:.9},{:.9}\n",
            i,
            s.node,
            s.old_label,
            s.new_label,
            rat_to_f64(s.pot_before),
            rat_to_f64(s.pot_after),
        ));
    }
    out
}

fn cmd_baseline(args: BaselineArgs) -> Result<i32> {
    let g = gio::load_graph(&args.graph)?;
    let problem = args.problem.build(&g)?;
    problem.check_degree(&g)?;
    let initial = match &args.labeling {
        Some(path) => gio::load_labeling(&g, &problem, path)?,
        None => {
            let (nl, hl) = problem.first_labels();
            Labeling::uniform(&g, nl, hl)
        }
    };
    let policy = match args.policy.as_str() {
        "lowest_id" => FixPolicy::LowestId,
        "random" => FixPolicy::Random {
            seed: args.policy_seed,
        },
        other => bail!("unknown policy {other:?}"),
    };
    let (labeling, trace) = sequential_fix(&problem, &g, &initial, policy);
    std::fs::create_dir_all(&args.out_dir)?;
    gio::save_labeling(&g, &problem, &labeling, &args.out_dir.join("labeling_baseline.json"))?;
    std::fs::write(args.out_dir.join("fixes_baseline.csv"), fix_trace_csv(&trace))?;
    let report = verify_solution(&problem, &g, &labeling);
    let summary = serde_json::json!({
        "format_version": 1,
        "n": g.n(),
        "problem": problem.name,
        "flips": trace.flips(),
        "edge_count": g.edge_count(),
        "verified": report.ok,
    });
    let mut text = serde_json::to_string(&summary)?;
    text.push('\n');
    std::fs::write(args.out_dir.join("summary_baseline.json"), text)?;
    println!(
        "baseline: {} flips on {} edges, verified={}",
        trace.flips(),
        g.edge_count(),
        report.ok
    );
    Ok(if report.ok { 0 } else { 2 })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let g = gio::load_graph(&args.graph)?;
    let problem = args.problem.build(&g)?;
    problem.check_degree(&g)?;
    let labeling = gio::load_labeling(&g, &problem, &args.labeling)?;
    let violations = independent_violations(&problem, &g, &labeling);
    let library_report = verify_solution(&problem, &g, &labeling);
    if violations != library_report.violations {
        bail!(
            "verifier disagreement: independent {:?} vs library {:?}",
            violations,
            library_report.violations
        );
    }
    if violations.is_empty() {
        println!("ok: all {} nodes satisfied", g.n());
        Ok(0)
    } else {
        println!("violations ({}):", violations.len());
        for v in &violations {
            println!("  node {v}");
        }
        Ok(2)
    }
}

fn cmd_audit(args: AuditArgs) -> Result<i32> {
    let oracle = OracleConfig {
        samples: args.samples,
        seed: args.seed,
        max_exhaustive_n: args.max_n,
        ..OracleConfig::default()
    };
    let report = run_audit(&oracle)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    let ok = report["all_passed"].as_bool().unwrap_or(false);
    Ok(if ok { 0 } else { 2 })
}

fn run_audit(oracle: &OracleConfig) -> Result<serde_json::Value> {
    use lop_sim::lop::locally_optimal_cut;

    // subset inequality over random small instances
    let mut subset_failures = 0usize;
    let problem = locally_optimal_cut(3);
    for i in 0..oracle.samples {
        let seed = derive_seed(oracle.seed, i as u64);
        let (g, l) = analysis::random_small_instance(&problem, 8, seed);
        let (s, b) = analysis::random_split(&g, seed);
        let check =
            analysis::check_subset_inequality(&problem, &g, &l, &s, &b, oracle.relabel_cap)?;
        if !check.holds {
            subset_failures += 1;
        }
    }

    // local witnesses inside exhaustively-found minimal improving sets;
    // realized radii are reported per epsilon as a trend, not asserted
    let mut witness_checked = 0usize;
    let mut witness_failures = 0usize;
    let eps_denominators: [i64; 3] = [2, 4, 8];
    let mut radius_sums = [0usize; 3];
    let mut radius_maxes = [0usize; 3];
    let mut radius_counts = [0usize; 3];
    let mut instance = 0u64;
    while witness_checked < oracle.samples {
        let seed = derive_seed(oracle.seed.wrapping_add(1), instance);
        instance += 1;
        let (g, l) = analysis::random_small_instance(&problem, oracle.max_exhaustive_n.min(8), seed);
        let minimal = analysis::exhaustive_minimal_improving_sets(
            &problem,
            &g,
            &l,
            oracle.max_exhaustive_n,
            oracle.relabel_cap,
        )?;
        for set in minimal.iter().take(4) {
            for &v in set.nodes.iter().take(2) {
                for (i, &den) in eps_denominators.iter().enumerate() {
                    let eps = set.improving_ratio / lop_sim::rational::rat_int(den);
                    match analysis::find_local_witness(
                        &problem,
                        &g,
                        &l,
                        set,
                        v,
                        eps,
                        oracle.relabel_cap,
                    ) {
                        Ok((_, k)) => {
                            radius_sums[i] += k;
                            radius_maxes[i] = radius_maxes[i].max(k);
                            radius_counts[i] += 1;
                        }
                        Err(_) => witness_failures += 1,
                    }
                }
                witness_checked += 1;
                if witness_checked >= oracle.samples {
                    break;
                }
            }
            if witness_checked >= oracle.samples {
                break;
            }
        }
        if instance > 10_000 {
            break;
        }
    }
    let witness_radius_trend: Vec<serde_json::Value> = eps_denominators
        .iter()
        .enumerate()
        .map(|(i, &den)| {
            serde_json::json!({
                "epsilon": format!("ratio/{den}"),
                "mean_radius": if radius_counts[i] == 0 { 0.0 } else {
                    radius_sums[i] as f64 / radius_counts[i] as f64
                },
                "max_radius": radius_maxes[i],
                "samples": radius_counts[i],
            })
        })
        .collect();

    // chain witnesses over generated sequences
    let mut chain_checked = 0usize;
    let mut chain_failures = 0usize;
    let mut instance = 0u64;
    while chain_checked < oracle.samples / 2 {
        let seed = derive_seed(oracle.seed.wrapping_add(2), instance);
        instance += 1;
        let (g, l) = analysis::random_small_instance(&problem, oracle.max_exhaustive_n, seed);
        let beta = problem.lambda / lop_sim::rational::rat_int(4);
        let bounds = SearchBounds {
            min_ratio: beta,
            diameter_cap: g.n(),
            size_cap: 3,
        };
        let all: Vec<_> = (0..g.n()).collect();
        let seq = lop_sim::improving::maximal_sequence(&problem, &g, &l, &all, bounds);
        if seq.steps.is_empty() {
            continue;
        }
        let eps = beta / lop_sim::rational::rat_int(4);
        let v = seq.steps[0].nodes[0];
        match analysis::check_chain_witness(&problem, &g, &seq, v, eps, oracle.relabel_cap) {
            Ok(_) => {}
            Err(_) => chain_failures += 1,
        }
        chain_checked += 1;
        if instance > 10_000 {
            break;
        }
    }

    // border containment on an instrumented run
    let g = generate(&GraphKind::Cycle { n: 32 })?;
    let problem2 = locally_optimal_cut(2);
    let config = AlgorithmConfig {
        seed: oracle.seed,
        instrument: true,
        fallback: Fallback::None,
        retry_limit: 0,
        ..AlgorithmConfig::default()
    };
    let result = algorithm::run(&g, &problem2, &config)?;
    let schedule = algorithm::Schedule::derive(&problem2, g.n(), &config);
    let border = analysis::border_distance_report(
        &problem2,
        &g,
        &result,
        &config.constants,
        &schedule,
        config.size_cap,
    )?;
    let border_ok = border.iter().all(|r| r.contained);

    let all_passed =
        subset_failures == 0 && witness_failures == 0 && chain_failures == 0 && border_ok;
    Ok(serde_json::json!({
        "format_version": 1,
        "subset_inequality": {"samples": oracle.samples, "failures": subset_failures},
        "local_witness": {
            "samples": witness_checked,
            "failures": witness_failures,
            "radius_trend": witness_radius_trend,
        },
        "chain_witness": {"samples": chain_checked, "failures": chain_failures},
        "border_report": border,
        "all_passed": all_passed,
    }))
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: SweepSpec = serde_json::from_str(&text)?;
    let workers = workers_from_env();
    std::fs::create_dir_all(&args.out_dir)?;

    let mut cells: Vec<(usize, u64)> = Vec::new();
    for &n in &spec.n_values {
        for &seed in &spec.seeds {
            cells.push((n, seed));
        }
    }
    let problem = spec.problem.build()?;
    let results: Vec<(usize, u64, RunResult)> = run_cells(&spec, &problem, &cells, workers)?;

    let mut csv = String::from(
        "n,seed,verified,fallback_used,attempts,phases_run,total_rounds,sets_applied,pot_initial,pot_final\n",
    );
    let mut worst = 0;
    for (n, seed, result) in &results {
        let sets: usize = result.trace.phases.iter().map(|p| p.sets_applied).sum();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.9},{:.9}\n",
            n,
            seed,
            result.verified,
            result.trace.fallback_used,
            result.trace.attempts,
            result.trace.phases.len(),
            result.trace.total_rounds,
            sets,
            rat_to_f64(result.trace.pot_initial),
            rat_to_f64(result.trace.pot_final),
        ));
        worst = worst_code(worst, algorithm::exit_code(result));
    }
    std::fs::write(args.out_dir.join("sweep.csv"), &csv)?;
    println!("wrote {} rows to sweep.csv", results.len());
    Ok(worst)
}

fn sweep_graph(spec: &SweepSpec, n: usize, seed: u64) -> Result<LabeledGraph> {
    let kind = match spec.kind.as_str() {
        "cycle" => GraphKind::Cycle { n },
        "path" => GraphKind::Path { n },
        "random_regular" => GraphKind::RandomRegular {
            n,
            degree: spec.degree,
            seed: derive_seed(seed, 0x9ea9),
        },
        other => bail!("unknown sweep kind {other:?}"),
    };
    Ok(generate(&kind)?)
}

fn run_cells(
    spec: &SweepSpec,
    problem: &LopProblem,
    cells: &[(usize, u64)],
    workers: usize,
) -> Result<Vec<(usize, u64, RunResult)>> {
    let run_cell = |&(n, seed): &(usize, u64)| -> Result<(usize, u64, RunResult)> {
        let g = sweep_graph(spec, n, seed)?;
        let config = AlgorithmConfig {
            seed,
            workers: 1,
            ..spec.algorithm.clone()
        };
        let result = algorithm::run(&g, problem, &config)?;
        Ok((n, seed, result))
    };
    if workers <= 1 {
        return cells.iter().map(run_cell).collect();
    }
    type CellSlot = std::sync::Mutex<Option<Result<(usize, u64, RunResult)>>>;
    let slots: Vec<CellSlot> = cells.iter().map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(run_cell(&cells[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().ok_or_else(|| anyhow!("cell did not run"))?)
        .collect()
}

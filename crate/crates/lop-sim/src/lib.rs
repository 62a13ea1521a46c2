//! Simulation library for local-search labeling problems on bounded-degree
//! graphs: a graph model with ports and half-edges, problems defined by
//! local potentials, exponential-shift clustering, a bounded improving-set
//! search, the clustered phase algorithm with an escalating ratio schedule,
//! a sequential baseline fixer, and brute-force analysis oracles.

pub mod algorithm;
pub mod analysis;
pub mod baseline;
pub mod constants;
pub mod graph;
pub mod improving;
pub mod io;
pub mod lop;
pub mod mpx;
pub mod rational;
pub mod seed;

pub use algorithm::{run, AlgorithmConfig, Fallback, RunResult, ScaleMode, Schedule};
pub use graph::{generate, GraphKind, LabeledGraph, NodeId};
pub use lop::{
    defective_coloring, locally_optimal_cut, total_potential, verify_solution, Labeling,
    LopProblem,
};
pub use rational::Rat;

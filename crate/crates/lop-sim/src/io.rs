//! Graph and labeling file formats.
//!
//! Graphs: JSON ({"n", "edges", optional "node_labels", "half_edge_labels",
//! "ports"}) or a plain edge-list text format (one "u v" per line, "#"
//! comments). Labelings: JSON mapping node id -> output label, with
//! half-edge outputs included only when the alphabet is nontrivial.

use crate::graph::{GraphError, Label, LabeledGraph};
use crate::lop::{Labeling, LopProblem};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid graph file: {0}")]
    InvalidGraph(#[from] GraphError),
    #[error("invalid file contents: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ports: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<(Label, Label)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_edge_labels: Option<Vec<Vec<(Label, Label)>>>,
}

pub fn save_graph(g: &LabeledGraph, path: &Path) -> Result<(), FileError> {
    let sorted_ports = |v: usize| {
        let mut s = g.neighbors(v).to_vec();
        s.sort_unstable();
        s
    };
    let ports_nontrivial = (0..g.n()).any(|v| g.neighbors(v) != sorted_ports(v));
    let labels_nontrivial = g.node_labels.iter().any(|&l| l != (0, 0))
        || g.half_edge_labels.iter().flatten().any(|&l| l != (0, 0));
    let file = GraphFile {
        n: g.n(),
        edges: g.edges(),
        ports: ports_nontrivial.then(|| (0..g.n()).map(|v| g.neighbors(v).to_vec()).collect()),
        node_labels: labels_nontrivial.then(|| g.node_labels.clone()),
        half_edge_labels: labels_nontrivial.then(|| g.half_edge_labels.clone()),
    };
    let mut text = serde_json::to_string(&file).map_err(|e| FileError::Invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<LabeledGraph, FileError> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().map(|e| e == "json").unwrap_or(false)
        || text.trim_start().starts_with('{')
    {
        load_graph_json(&text)
    } else {
        load_graph_edge_list(&text)
    }
}

fn load_graph_json(text: &str) -> Result<LabeledGraph, FileError> {
    if text.trim().is_empty() {
        return Err(FileError::Parse {
            line: 1,
            msg: "empty file".into(),
        });
    }
    let file: GraphFile = serde_json::from_str(text).map_err(|e| FileError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let mut g = LabeledGraph::build(file.n, &file.edges)?;
    if let Some(ports) = file.ports {
        if ports.len() != g.n() {
            return Err(FileError::Invalid("ports list length != n".into()));
        }
        apply_ports(&mut g, &ports)?;
    }
    if let Some(nl) = file.node_labels {
        if nl.len() != g.n() {
            return Err(FileError::Invalid("node_labels length != n".into()));
        }
        g.node_labels = nl;
    }
    if let Some(hel) = file.half_edge_labels {
        for (v, l) in hel.iter().enumerate() {
            if v >= g.n() || l.len() != g.degree(v) {
                return Err(FileError::Invalid(
                    "half_edge_labels shape does not match adjacency".into(),
                ));
            }
        }
        g.half_edge_labels = hel;
    }
    Ok(g)
}

fn apply_ports(g: &mut LabeledGraph, ports: &[Vec<usize>]) -> Result<(), FileError> {
    // Rebuild with the stated port order by shuffling each node into place.
    for (v, order) in ports.iter().enumerate() {
        let mut expect = g.neighbors(v).to_vec();
        expect.sort_unstable();
        let mut got = order.clone();
        got.sort_unstable();
        if got != expect {
            return Err(FileError::Invalid(format!(
                "ports of node {v} are not a permutation of its neighbors"
            )));
        }
    }
    g.set_ports(ports);
    Ok(())
}

fn load_graph_edge_list(text: &str) -> Result<LabeledGraph, FileError> {
    let mut edges = Vec::new();
    let mut max_id = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, FileError> {
            tok.ok_or(FileError::Parse {
                line: line_no,
                msg: "expected two node ids".into(),
            })?
            .parse()
            .map_err(|_| FileError::Parse {
                line: line_no,
                msg: "node id is not an integer".into(),
            })
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(FileError::Parse {
                line: line_no,
                msg: "trailing tokens after edge".into(),
            });
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v));
    }
    let Some(max_id) = max_id else {
        return Err(FileError::Parse {
            line: 1,
            msg: "empty file".into(),
        });
    };
    Ok(LabeledGraph::build(max_id + 1, &edges)?)
}

#[derive(Serialize, Deserialize)]
struct LabelingFile {
    format_version: u32,
    nodes: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_edges: Option<serde_json::Map<String, serde_json::Value>>,
}

pub fn labeling_to_json(g: &LabeledGraph, problem: &LopProblem, l: &Labeling) -> String {
    let mut nodes = serde_json::Map::new();
    for v in 0..g.n() {
        nodes.insert(v.to_string(), serde_json::json!(l.node_out[v]));
    }
    let half_edges = if problem.half_edge_out_labels.len() > 1 {
        let mut m = serde_json::Map::new();
        for v in 0..g.n() {
            for p in 0..g.degree(v) {
                m.insert(format!("{v}:{p}"), serde_json::json!(l.half_edge_out[v][p]));
            }
        }
        Some(m)
    } else {
        None
    };
    let file = LabelingFile {
        format_version: 1,
        nodes,
        half_edges,
    };
    let mut s = serde_json::to_string(&file).expect("labeling serializes");
    s.push('\n');
    s
}

pub fn save_labeling(
    g: &LabeledGraph,
    problem: &LopProblem,
    l: &Labeling,
    path: &Path,
) -> Result<(), FileError> {
    std::fs::write(path, labeling_to_json(g, problem, l))?;
    Ok(())
}

pub fn load_labeling(
    g: &LabeledGraph,
    problem: &LopProblem,
    path: &Path,
) -> Result<Labeling, FileError> {
    let text = std::fs::read_to_string(path)?;
    let file: LabelingFile = serde_json::from_str(&text).map_err(|e| FileError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.nodes.len() != g.n() {
        return Err(FileError::Invalid(format!(
            "labeling covers {} nodes but the graph has {}",
            file.nodes.len(),
            g.n()
        )));
    }
    if problem.half_edge_out_labels.len() > 1 && file.half_edges.is_none() {
        return Err(FileError::Invalid(
            "this problem labels half-edges, but the file has no half_edges map".into(),
        ));
    }
    let mut l = Labeling::uniform(g, problem.node_out_labels[0], problem.half_edge_out_labels[0]);
    for (k, v) in &file.nodes {
        let id: usize = k.parse().map_err(|_| {
            FileError::Invalid(format!("node key {k:?} is not an integer id"))
        })?;
        if id >= g.n() {
            return Err(FileError::Invalid(format!("node id {id} out of range")));
        }
        let lab = v
            .as_i64()
            .ok_or_else(|| FileError::Invalid(format!("label for node {id} is not an integer")))?;
        if !problem.node_out_labels.contains(&lab) {
            return Err(FileError::Invalid(format!(
                "label {lab} for node {id} is not in the output alphabet"
            )));
        }
        l.node_out[id] = lab;
    }
    if let Some(hes) = &file.half_edges {
        for (k, v) in hes {
            let (vs, ps) = k.split_once(':').ok_or_else(|| {
                FileError::Invalid(format!("half-edge key {k:?} is not of the form v:port"))
            })?;
            let (id, port): (usize, usize) = (
                vs.parse()
                    .map_err(|_| FileError::Invalid(format!("bad half-edge key {k:?}")))?,
                ps.parse()
                    .map_err(|_| FileError::Invalid(format!("bad half-edge key {k:?}")))?,
            );
            if id >= g.n() || port >= g.degree(id) {
                return Err(FileError::Invalid(format!("half-edge {k} out of range")));
            }
            let lab = v.as_i64().ok_or_else(|| {
                FileError::Invalid(format!("label for half-edge {k} is not an integer"))
            })?;
            l.half_edge_out[id][port] = lab;
        }
    }
    Ok(l)
}

/// Render an edge-list text file (the inverse of the text loader).
pub fn graph_to_edge_list(g: &LabeledGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} nodes, {} edges", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

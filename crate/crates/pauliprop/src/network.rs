//! Directed-graph view of a full transfer matrix.
//!
//! Each Pauli basis index is a node; an edge `k -> j` records that basis
//! operator `k` spawns operator `j` under conjugation with magnitude above
//! a threshold. Degree statistics and weakly-connected components of this
//! graph separate the easy circuit families from the hard ones: Clifford
//! conjugation permutes the basis (out-degree 1), matchgate conjugation is
//! confined to small blocks, and generic circuits fan out.
//!
//! The identity node is structurally special (it only ever has its
//! self-loop), so it is excluded from the degree statistics while still
//! being reported in components.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::Circuit;
use crate::dense::{build_full_omega, DenseError, FullOmega};
use crate::pauli::PauliString;
use crate::propagation::NoiseModel;

/// Default edge threshold: the numerical-zero cutoff, not the user-facing
/// truncation threshold.
pub const GRAPH_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("edge list row {row}: {message}")]
    BadCsv { row: usize, message: String },
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One directed edge: basis operator `from` spawns `to` with `|omega|`
/// equal to `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Adjacency structure of a transfer matrix above a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorGraph {
    n_qubits: usize,
    edges: Vec<Edge>,
    threshold: f64,
}

impl OperatorGraph {
    /// Builds the graph straight from matrix entries; `entries[(j, k)]`
    /// above the threshold in magnitude becomes the edge `k -> j`.
    pub fn from_entries(
        n_qubits: usize,
        entries: &nalgebra::DMatrix<f64>,
        threshold: f64,
    ) -> OperatorGraph {
        let dim = 1usize << (2 * n_qubits);
        debug_assert_eq!(entries.nrows(), dim);
        let mut edges = Vec::new();
        for k in 0..dim {
            for j in 0..dim {
                let w = entries[(j, k)].abs();
                if w > threshold {
                    edges.push(Edge { from: k, to: j, weight: w });
                }
            }
        }
        OperatorGraph { n_qubits, edges, threshold }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Total node count `4^N`, isolated nodes included.
    pub fn n_nodes(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn out_degrees(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_nodes()];
        for e in &self.edges {
            counts[e.from] += 1;
        }
        counts
    }

    /// Mean out-degree over all nodes except the identity node.
    pub fn mean_out_degree(&self) -> f64 {
        let counts = self.out_degrees();
        let total: usize = counts.iter().skip(1).sum();
        total as f64 / (self.n_nodes() - 1) as f64
    }

    /// Largest out-degree over all nodes except the identity node.
    pub fn max_out_degree(&self) -> usize {
        self.out_degrees().iter().skip(1).max().copied().unwrap_or(0)
    }

    /// Weakly-connected components as sorted node lists, largest first
    /// (ties broken by smallest member). Nodes without edges form
    /// singleton components.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n_nodes());
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for node in 0..self.n_nodes() {
            groups.entry(uf.find(node)).or_default().push(node);
        }
        let mut components: Vec<Vec<usize>> = groups.into_values().collect();
        components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        components
    }

    /// The weak component containing `node`, as a sorted node list.
    pub fn component_containing(&self, node: usize) -> Vec<usize> {
        self.weak_components()
            .into_iter()
            .find(|c| c.binary_search(&node).is_ok())
            .expect("every node lies in a component")
    }

    /// DOT digraph with Pauli-text node names and edge opacity scaled by
    /// weight relative to the largest weight present. Isolated nodes are
    /// not listed.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph omega {\n");
        let max_weight =
            self.edges.iter().map(|e| e.weight).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        for e in &self.edges {
            let alpha = ((e.weight / max_weight).clamp(0.0, 1.0) * 255.0).round() as u8;
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [color=\"#1b4f8b{:02x}\" weight={:.6}];\n",
                self.label(e.from),
                self.label(e.to),
                alpha,
                e.weight,
            ));
        }
        out.push_str("}\n");
        out
    }

    /// CSV `from,to,weight` with Pauli-text labels, edges in stored order.
    pub fn export_edges_csv(&self) -> String {
        let mut out = String::from("from,to,weight\n");
        for e in &self.edges {
            out.push_str(&format!(
                "{},{},{:.16e}\n",
                self.label(e.from),
                self.label(e.to),
                e.weight
            ));
        }
        out
    }

    fn label(&self, node: usize) -> String {
        PauliString::from_index(self.n_qubits, node as u64)
            .expect("node id within the basis")
            .to_string()
    }

    /// Degree and component summary for serialization.
    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            d_mean: self.mean_out_degree(),
            d_max: self.max_out_degree(),
            components: self.weak_components().iter().map(Vec::len).collect(),
        }
    }
}

/// Rebuilds a graph from its `from,to,weight` CSV: the edge multiset
/// round-trips exactly.
pub fn parse_edges_csv(
    n_qubits: usize,
    text: &str,
    threshold: f64,
) -> Result<OperatorGraph, NetworkError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "from,to,weight")) => {}
        other => {
            return Err(NetworkError::BadCsv {
                row: 0,
                message: format!("expected header from,to,weight, got {:?}", other.map(|o| o.1)),
            })
        }
    }
    let mut edges = Vec::new();
    for (row, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| {
            fields.next().ok_or_else(|| NetworkError::BadCsv {
                row,
                message: format!("missing {what} field"),
            })
        };
        let from_text = next("from")?;
        let to_text = next("to")?;
        let weight_text = next("weight")?;
        let parse_node = |text: &str| -> Result<usize, NetworkError> {
            let p: PauliString = text
                .parse()
                .map_err(|e| NetworkError::BadCsv { row, message: format!("{text}: {e}") })?;
            if p.n_qubits() != n_qubits {
                return Err(NetworkError::BadCsv {
                    row,
                    message: format!("label {text} has {} qubits, expected {n_qubits}", p.n_qubits()),
                });
            }
            Ok(p.index() as usize)
        };
        let weight: f64 = weight_text
            .parse()
            .map_err(|e| NetworkError::BadCsv { row, message: format!("{weight_text}: {e}") })?;
        edges.push(Edge { from: parse_node(from_text)?, to: parse_node(to_text)?, weight });
    }
    Ok(OperatorGraph { n_qubits, edges, threshold })
}

/// Thresholded adjacency graph of a full transfer matrix.
pub fn omega_graph(omega: &FullOmega, threshold: f64) -> OperatorGraph {
    OperatorGraph::from_entries(omega.n_qubits(), omega.entries(), threshold)
}

/// Per-layer branching estimate: the geometric mean, over stored layers,
/// of the mean out-degree of each single-layer transfer graph. This is an
/// estimator for the growth rate of significant-term counts, not a closed
/// formula; empty layers contribute a factor of 1.
pub fn layer_growth_estimate(
    circuit: &Circuit,
    noise: &NoiseModel,
    threshold: f64,
) -> Result<f64, NetworkError> {
    if circuit.depth() == 0 {
        return Ok(1.0);
    }
    let mut log_sum = 0.0f64;
    for layer in circuit.layers() {
        let mut single = Circuit::new(circuit.n_qubits()).expect("qubit count already validated");
        single.push_layer(layer.clone()).expect("layer already validated");
        let omega = build_full_omega(&single, noise)?;
        let mean = omega_graph(&omega, threshold).mean_out_degree();
        if mean <= 0.0 {
            return Ok(0.0);
        }
        log_sum += mean.ln();
    }
    Ok((log_sum / circuit.depth() as f64).exp())
}

/// Degree and component statistics in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub d_mean: f64,
    pub d_max: usize,
    /// Component sizes, largest first.
    pub components: Vec<usize>,
}

/// Union-find over dense node ids with path halving and union by size.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

//! Chemical hypergraphs: vertices plus oriented hyperedges.
//!
//! An oriented hyperedge is a pair `(inputs, outputs)` of vertex sets. Vertices
//! in both sets are catalysts; their contributions to the signed incidence and
//! to the Laplacian cancel. A classical (unoriented) hyperedge is stored with
//! all members as inputs and no outputs.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypergraphError {
    #[error("malformed hypergraph JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("hypergraph must have at least one vertex")]
    NoVertices,
    #[error("hyperedge {edge}: vertex index {vertex} out of range (N = {n})")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        n: usize,
    },
    #[error("hyperedge {edge} is empty (no inputs and no outputs)")]
    EmptyHyperedge { edge: usize },
    #[error("hyperedge {edge}: vertex {vertex} listed twice in its {side}")]
    DuplicateMember {
        edge: usize,
        vertex: usize,
        side: &'static str,
    },
    #[error("edge {edge}: self-loop at vertex {vertex} is not allowed")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("vertex labels must be distinct, `{0}` appears twice")]
    DuplicateLabel(String),
}

/// One oriented hyperedge. Member lists are kept sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hyperedge {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl Hyperedge {
    /// Builds a hyperedge from arbitrary member lists, sorting them.
    /// Duplicates within one side are rejected by [`ChemicalHypergraph::new`].
    pub fn new(mut inputs: Vec<usize>, mut outputs: Vec<usize>) -> Self {
        inputs.sort_unstable();
        outputs.sort_unstable();
        Self { inputs, outputs }
    }

    /// Classical hyperedge: every member is an input.
    pub fn unoriented(members: Vec<usize>) -> Self {
        Self::new(members, Vec::new())
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Vertices that are both input and output.
    pub fn catalysts(&self) -> Vec<usize> {
        self.inputs
            .iter()
            .copied()
            .filter(|v| self.outputs.binary_search(v).is_ok())
            .collect()
    }

    /// Inputs that are not catalysts.
    pub fn pure_inputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.inputs
            .iter()
            .copied()
            .filter(|v| self.outputs.binary_search(v).is_err())
    }

    /// Outputs that are not catalysts.
    pub fn pure_outputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.outputs
            .iter()
            .copied()
            .filter(|v| self.inputs.binary_search(v).is_err())
    }

    /// All distinct members, `inputs ∪ outputs`, ascending.
    pub fn members(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.inputs.iter().chain(&self.outputs).copied().collect();
        set.into_iter().collect()
    }

    /// Same hyperedge with inputs and outputs swapped.
    pub fn reversed(&self) -> Self {
        Self {
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
        }
    }

    /// `|V \ W| - |W \ V|`.
    pub fn imbalance(&self) -> i64 {
        self.pure_inputs().count() as i64 - self.pure_outputs().count() as i64
    }

    fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChemicalHypergraph {
    n_vertices: usize,
    hyperedges: Vec<Hyperedge>,
    labels: Option<Vec<String>>,
}

impl ChemicalHypergraph {
    /// Validates and builds a hypergraph.
    pub fn new(n_vertices: usize, hyperedges: Vec<Hyperedge>) -> Result<Self, HypergraphError> {
        if n_vertices == 0 {
            return Err(HypergraphError::NoVertices);
        }
        for (edge, h) in hyperedges.iter().enumerate() {
            if h.is_empty() {
                return Err(HypergraphError::EmptyHyperedge { edge });
            }
            for (side, list) in [("inputs", &h.inputs), ("outputs", &h.outputs)] {
                // sorted by construction, so duplicates are adjacent
                if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                    return Err(HypergraphError::DuplicateMember {
                        edge,
                        vertex: w[0],
                        side,
                    });
                }
                if let Some(&vertex) = list.iter().find(|&&v| v >= n_vertices) {
                    return Err(HypergraphError::VertexOutOfRange {
                        edge,
                        vertex,
                        n: n_vertices,
                    });
                }
            }
        }
        Ok(Self {
            n_vertices,
            hyperedges,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, HypergraphError> {
        assert_eq!(labels.len(), self.n_vertices, "one label per vertex");
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(HypergraphError::DuplicateLabel(l.clone()));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Graph embedding: each edge `(i, j)` becomes the hyperedge `({i}, {j})`.
    pub fn from_graph(n: usize, edges: &[(usize, usize)]) -> Result<Self, HypergraphError> {
        let mut hyperedges = Vec::with_capacity(edges.len());
        for (edge, &(i, j)) in edges.iter().enumerate() {
            if i == j {
                return Err(HypergraphError::SelfLoop { edge, vertex: i });
            }
            hyperedges.push(Hyperedge::new(vec![i], vec![j]));
        }
        Self::new(n, hyperedges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[Hyperedge] {
        &self.hyperedges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Name used for vertex `i` in diagnostics.
    pub fn vertex_name(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// Copy with the hyperedges at `indices` reoriented.
    pub fn reoriented(&self, indices: &[usize]) -> Self {
        let mut out = self.clone();
        for &k in indices {
            out.hyperedges[k] = out.hyperedges[k].reversed();
        }
        out
    }

    /// True when every hyperedge is a plain oriented edge: one pure input,
    /// one pure output, no catalysts.
    pub fn is_graph(&self) -> bool {
        self.hyperedges
            .iter()
            .all(|h| h.inputs.len() == 1 && h.outputs.len() == 1 && h.inputs != h.outputs)
    }

    /// Two-colouring test: can the vertices be split so that, in every
    /// hyperedge, pure inputs and pure outputs lie in opposite classes?
    pub fn is_bipartite(&self) -> bool {
        // constraint graph: same-side members share a colour, opposite sides differ
        let n = self.n_vertices;
        let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
        for h in &self.hyperedges {
            let ins: Vec<usize> = h.pure_inputs().collect();
            let outs: Vec<usize> = h.pure_outputs().collect();
            let anchor = match ins.first().or(outs.first()) {
                Some(&a) => a,
                None => continue,
            };
            let anchor_is_input = !ins.is_empty();
            for &v in &ins {
                let differ = !anchor_is_input;
                adj[anchor].push((v, differ));
                adj[v].push((anchor, differ));
            }
            for &v in &outs {
                let differ = anchor_is_input;
                adj[anchor].push((v, differ));
                adj[v].push((anchor, differ));
            }
        }
        let mut colour: Vec<Option<bool>> = vec![None; n];
        for start in 0..n {
            if colour[start].is_some() {
                continue;
            }
            colour[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let cu = colour[u].unwrap();
                for &(v, differ) in &adj[u] {
                    let want = cu ^ differ;
                    match colour[v] {
                        None => {
                            colour[v] = Some(want);
                            stack.push(v);
                        }
                        Some(c) if c != want => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for ChemicalHypergraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hypergraph(N={}, M={})",
            self.n_vertices,
            self.hyperedges.len()
        )
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum VertexSpec {
    Count(usize),
    Labels(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperedgeJson {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct HypergraphJson {
    vertices: VertexSpec,
    hyperedges: Vec<HyperedgeJson>,
}

/// Parses the hypergraph JSON format and validates the result.
pub fn parse_hypergraph(text: &str) -> Result<ChemicalHypergraph, HypergraphError> {
    let raw: HypergraphJson = serde_json::from_str(text).map_err(|e| HypergraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let (n, labels) = match raw.vertices {
        VertexSpec::Count(n) => (n, None),
        VertexSpec::Labels(l) => (l.len(), Some(l)),
    };
    let mut hyperedges = Vec::with_capacity(raw.hyperedges.len());
    for h in raw.hyperedges {
        hyperedges.push(Hyperedge::new(h.inputs, h.outputs));
    }
    let hg = ChemicalHypergraph::new(n, hyperedges)?;
    match labels {
        Some(l) => hg.with_labels(l),
        None => Ok(hg),
    }
}

/// Compact JSON with sorted member lists, newline-terminated.
pub fn serialize_hypergraph(h: &ChemicalHypergraph) -> String {
    let raw = HypergraphJson {
        vertices: match &h.labels {
            Some(l) => VertexSpec::Labels(l.clone()),
            None => VertexSpec::Count(h.n_vertices),
        },
        hyperedges: h
            .hyperedges
            .iter()
            .map(|e| HyperedgeJson {
                inputs: e.inputs.clone(),
                outputs: e.outputs.clone(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&raw).expect("hypergraph serialization is infallible");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Incidence structure

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrices {
    /// `binary[(i, h)] = 1` iff `i ∈ V_h ∪ W_h`.
    pub binary: DMatrix<u8>,
    /// `+1` for pure inputs, `-1` for pure outputs, `0` for catalysts and non-members.
    pub signed: DMatrix<i8>,
    /// Number of hyperedges in which the vertex is a pure input or pure output.
    pub degrees: Vec<usize>,
}

pub fn incidence(h: &ChemicalHypergraph) -> IncidenceMatrices {
    let n = h.n_vertices;
    let m = h.hyperedges.len();
    let mut binary = DMatrix::<u8>::zeros(n, m);
    let mut signed = DMatrix::<i8>::zeros(n, m);
    for (k, e) in h.hyperedges.iter().enumerate() {
        for &v in e.inputs.iter().chain(&e.outputs) {
            binary[(v, k)] = 1;
        }
        for v in e.pure_inputs() {
            signed[(v, k)] = 1;
        }
        for v in e.pure_outputs() {
            signed[(v, k)] = -1;
        }
    }
    let degrees = (0..n)
        .map(|i| signed.row(i).iter().filter(|&&s| s != 0).count())
        .collect();
    IncidenceMatrices {
        binary,
        signed,
        degrees,
    }
}

/// `binary · binaryᵀ`: entry `(i, j)` counts hyperedges containing both `i` and `j`.
pub fn codegree_matrix(h: &ChemicalHypergraph) -> DMatrix<u64> {
    let inc = incidence(h);
    let n = h.n_vertices;
    let mut out = DMatrix::<u64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = inc
                .binary
                .row(i)
                .iter()
                .zip(inc.binary.row(j).iter())
                .map(|(&a, &b)| u64::from(a) * u64::from(b))
                .sum();
        }
    }
    out
}

/// Row sums of the binary incidence matrix and whether they are all equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityReport {
    pub regular: bool,
    pub counts: Vec<usize>,
}

pub fn check_regular_incidence(h: &ChemicalHypergraph) -> RegularityReport {
    let inc = incidence(h);
    let counts: Vec<usize> = (0..h.n_vertices)
        .map(|i| inc.binary.row(i).iter().map(|&b| b as usize).sum())
        .collect();
    let regular = counts.windows(2).all(|w| w[0] == w[1]);
    RegularityReport { regular, counts }
}

/// Per-hyperedge input/output imbalance. The constant vector lies in the
/// Laplacian kernel exactly when every imbalance is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncInvariance {
    pub invariant: bool,
    pub imbalances: Vec<i64>,
}

pub fn sync_invariance_check(h: &ChemicalHypergraph) -> SyncInvariance {
    let imbalances: Vec<i64> = h.hyperedges.iter().map(Hyperedge::imbalance).collect();
    SyncInvariance {
        invariant: imbalances.iter().all(|&d| d == 0),
        imbalances,
    }
}

//! The discrete state space and the per-directed-edge potential storage.
//!
//! Directed edges are stored in CSR order, sorted by `(from, to)`, so the
//! outgoing edges of a node form one contiguous range. A non-loop edge
//! `{n, m}` owns two directed slots, a loop `{n, n}` owns one.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub from: NodeId,
    pub to: NodeId,
}

impl DirectedEdge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Undirected graph with self-loops; immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct StateGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    directed: Vec<DirectedEdge>,
    offsets: Vec<usize>,
    reverse: Vec<EdgeId>,
}

impl StateGraph {
    /// Builds a graph from unordered pairs. Duplicates and orientation are ignored.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(Error::InvalidParameter("a state graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidParameter(format!(
                    "edge {{{a}, {b}}} references a node outside 0..{node_count}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<(NodeId, NodeId)> = set.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect();

        let mut directed: Vec<DirectedEdge> = Vec::with_capacity(2 * edges.len());
        for &(a, b) in &edges {
            directed.push(DirectedEdge { from: a, to: b });
            if a != b {
                directed.push(DirectedEdge { from: b, to: a });
            }
        }
        directed.sort();

        let mut offsets = vec![0usize; node_count + 1];
        for e in &directed {
            offsets[e.from.0 + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }

        let mut graph = Self {
            node_count,
            edges,
            directed,
            offsets,
            reverse: Vec::new(),
        };
        graph.reverse = graph
            .directed
            .iter()
            .map(|e| graph.find(e.to, e.from).expect("reverse edge stored"))
            .collect();
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Undirected edges `{n, m}` with `n <= m`, sorted.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn directed_count(&self) -> usize {
        self.directed.len()
    }

    pub fn directed_edges(&self) -> &[DirectedEdge] {
        &self.directed
    }

    #[inline]
    pub fn edge(&self, id: EdgeId) -> DirectedEdge {
        self.directed[id.0]
    }

    #[inline]
    pub fn reverse(&self, id: EdgeId) -> EdgeId {
        self.reverse[id.0]
    }

    /// Directed edges leaving `node` (including its loop, if any).
    #[inline]
    pub fn out_edges(&self, node: NodeId) -> Range<usize> {
        self.offsets[node.0]..self.offsets[node.0 + 1]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.out_edges(node).len()
    }

    /// The undirected edges touching `node`, including its loop.
    pub fn adjacency(&self, node: NodeId) -> Vec<(NodeId, NodeId)> {
        self.directed[self.out_edges(node)]
            .iter()
            .map(|e| (e.from.min(e.to), e.from.max(e.to)))
            .collect()
    }

    pub fn find(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        let range = self.out_edges(from);
        let base = range.start;
        self.directed[range]
            .binary_search_by_key(&to, |e| e.to)
            .ok()
            .map(|i| EdgeId(base + i))
    }

    pub fn has_loop(&self, node: NodeId) -> bool {
        self.find(node, node).is_some()
    }
}

/// Derives `E` from the union of the structurally nonzero entries over
/// all slices of `h`; edges that are switched on later exist from `t = 0`.
pub fn build_graph(h: &HamiltonianModel) -> Result<StateGraph> {
    StateGraph::from_edges(h.dim(), h.pattern())
}

/// Complex potential and last same-direction jump time per directed edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTable {
    values: Vec<C64>,
    last_jump: Vec<f64>,
}

impl PotentialTable {
    pub fn new(values: Vec<C64>, last_jump: Vec<f64>) -> Result<Self> {
        if values.len() != last_jump.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: last_jump.len(),
            });
        }
        Ok(Self { values, last_jump })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, e: EdgeId) -> C64 {
        self.values[e.0]
    }

    #[inline]
    pub fn last_jump(&self, e: EdgeId) -> f64 {
        self.last_jump[e.0]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn last_jumps(&self) -> &[f64] {
        &self.last_jump
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    #[inline]
    pub(crate) fn set_last_jump(&mut self, e: EdgeId, t: f64) {
        self.last_jump[e.0] = t;
    }

    pub fn get(&self, graph: &StateGraph, from: usize, to: usize) -> Option<C64> {
        graph
            .find(NodeId(from), NodeId(to))
            .map(|e| self.values[e.0])
    }
}

/// Replaces every component with magnitude below `epsilon` by one of
/// magnitude `epsilon`, keeping its phase (zero components get phase 0).
/// The result is not renormalized.
pub fn regularize_psi(psi: &[C64], epsilon: f64) -> Vec<C64> {
    psi.iter()
        .map(|&c| {
            let mag = c.norm();
            if mag >= epsilon {
                c
            } else if mag > 0.0 {
                c * (epsilon / mag)
            } else {
                C64::new(epsilon, 0.0)
            }
        })
        .collect()
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_psi must be finite and > 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// `A_nm = H_nm * psi'_m / psi'_n` over every directed edge, all `t̄ = 0`.
pub(crate) fn potentials_for(
    graph: &StateGraph,
    h: &SparseMatrix,
    psi: &[C64],
    epsilon: f64,
) -> Result<PotentialTable> {
    check_epsilon(epsilon)?;
    if psi.len() != graph.node_count() || h.dim() != graph.node_count() {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            got: psi.len(),
        });
    }
    let reg = regularize_psi(psi, epsilon);
    let mut values = Vec::with_capacity(graph.directed_count());
    for e in graph.directed_edges() {
        let a = h.get(e.from.0, e.to.0) * reg[e.to.0] / reg[e.from.0];
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("initial potential on {}->{} = {a}", e.from.0, e.to.0),
            });
        }
        values.push(a);
    }
    let n = values.len();
    PotentialTable::new(values, vec![0.0; n])
}

/// Initial potentials from the `t = 0` slice and the (regularized) initial state.
pub fn init_potentials(
    graph: &StateGraph,
    h: &HamiltonianModel,
    psi0: &[C64],
    epsilon_psi: f64,
) -> Result<PotentialTable> {
    let norm: f64 = psi0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "initial state must be normalized, |psi0| = {norm}"
        )));
    }
    potentials_for(graph, &h.slices()[0].matrix, psi0, epsilon_psi)
}

/// JSON checkpoint of a graph and its potential table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub node_count: usize,
    pub edges: Vec<[usize; 2]>,
    pub potentials: Vec<PotentialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub from: usize,
    pub to: usize,
    pub value: [f64; 2],
    pub last_jump: f64,
}

impl GraphSnapshot {
    pub fn capture(graph: &StateGraph, table: &PotentialTable) -> Self {
        Self {
            node_count: graph.node_count(),
            edges: graph.edges().iter().map(|&(a, b)| [a.0, b.0]).collect(),
            potentials: graph
                .directed_edges()
                .iter()
                .enumerate()
                .map(|(i, e)| PotentialRecord {
                    from: e.from.0,
                    to: e.to.0,
                    value: [table.values[i].re, table.values[i].im],
                    last_jump: table.last_jump[i],
                })
                .collect(),
        }
    }

    pub fn restore(&self) -> Result<(StateGraph, PotentialTable)> {
        let graph = StateGraph::from_edges(self.node_count, self.edges.iter().map(|e| (e[0], e[1])))?;
        if self.potentials.len() != graph.directed_count() {
            return Err(Error::Dimension {
                expected: graph.directed_count(),
                got: self.potentials.len(),
            });
        }
        let mut values = vec![C64::default(); graph.directed_count()];
        let mut last = vec![0.0; graph.directed_count()];
        for rec in &self.potentials {
            let id = graph.find(NodeId(rec.from), NodeId(rec.to)).ok_or_else(|| {
                Error::InvalidParameter(format!("snapshot edge {}->{} not in graph", rec.from, rec.to))
            })?;
            values[id.0] = C64::new(rec.value[0], rec.value[1]);
            last[id.0] = rec.last_jump;
        }
        Ok((graph, PotentialTable::new(values, last)?))
    }
}

//! Framed causal graphs, validation, and the causal-set correspondence.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{CtcError, Result};

/// A directed multigraph with ordered boundary nodes and, at every node, a
/// total order on incoming and on outgoing edges.
///
/// Node identifiers are indices into `names`; edge identifiers are indices
/// into `edges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedCausalGraph {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    in_order: Vec<Vec<usize>>,
    out_order: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Transitivity,
    InputArity,
    OutputArity,
    Framing,
    Boundary,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Transitivity => "transitivity",
            Self::InputArity => "input arity",
            Self::OutputArity => "output arity",
            Self::Framing => "framing",
            Self::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

impl FramedCausalGraph {
    /// Builds a graph whose framing lists each node's edges in edge-index order.
    /// Node and edge references are checked; structural rules are left to
    /// [`FramedCausalGraph::validate`].
    pub fn new(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
        inputs: Vec<usize>,
        outputs: Vec<usize>,
    ) -> Result<Self> {
        let n = names.len();
        let mut in_order = vec![Vec::new(); n];
        let mut out_order = vec![Vec::new(); n];
        for (e, &(s, t)) in edges.iter().enumerate() {
            if s >= n || t >= n {
                return Err(CtcError::Graph(format!("edge {e} refers to a missing node")));
            }
            out_order[s].push(e);
            in_order[t].push(e);
        }
        for &v in inputs.iter().chain(&outputs) {
            if v >= n {
                return Err(CtcError::Graph(format!("boundary node {v} does not exist")));
            }
        }
        Ok(Self { names, edges, inputs, outputs, in_order, out_order })
    }

    /// Replaces the framing of the listed nodes. Coverage is checked by
    /// [`FramedCausalGraph::validate`].
    pub fn with_framing(
        mut self,
        in_order: impl IntoIterator<Item = (usize, Vec<usize>)>,
        out_order: impl IntoIterator<Item = (usize, Vec<usize>)>,
    ) -> Result<Self> {
        for (v, order) in in_order {
            *self.in_order.get_mut(v).ok_or_else(|| CtcError::Graph(format!("node {v} does not exist")))? = order;
        }
        for (v, order) in out_order {
            *self.out_order.get_mut(v).ok_or_else(|| CtcError::Graph(format!("node {v} does not exist")))? = order;
        }
        Ok(self)
    }

    pub(crate) fn from_parts(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
        inputs: Vec<usize>,
        outputs: Vec<usize>,
        in_order: Vec<Vec<usize>>,
        out_order: Vec<Vec<usize>>,
    ) -> Self {
        Self { names, edges, inputs, outputs, in_order, out_order }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn in_order(&self, v: usize) -> &[usize] {
        &self.in_order[v]
    }

    pub fn out_order(&self, v: usize) -> &[usize] {
        &self.out_order[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.inputs.contains(&v) || self.outputs.contains(&v)
    }

    /// Nodes that are neither inputs nor outputs, in id order.
    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| !self.is_boundary(v)).collect()
    }

    /// In-degree plus out-degree; a self-loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|&(s, t)| usize::from(s == v) + usize::from(t == v)).sum()
    }

    /// Edge leaving input node `i` (by position in the input order).
    pub fn input_edge(&self, i: usize) -> Option<usize> {
        self.inputs.get(i).and_then(|&v| self.out_order[v].first().copied())
    }

    /// Edge entering output node `i` (by position in the output order).
    pub fn output_edge(&self, i: usize) -> Option<usize> {
        self.outputs.get(i).and_then(|&v| self.in_order[v].first().copied())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.node_count();
        let mut push = |kind, detail: String| out.push(Violation { kind, detail });

        let mut adj = vec![BTreeSet::new(); n];
        for &(s, t) in &self.edges {
            adj[s].insert(t);
        }
        let mut chords = BTreeSet::new();
        for x in 0..n {
            for &y in &adj[x] {
                if y == x {
                    continue;
                }
                for &z in &adj[y] {
                    if z != x && z != y && adj[x].contains(&z) {
                        chords.insert((x, z, y));
                    }
                }
            }
        }
        for (x, z, y) in chords {
            push(
                ViolationKind::Transitivity,
                format!(
                    "edge {} -> {} shortcuts {} -> {} -> {}",
                    self.names[x], self.names[z], self.names[x], self.names[y], self.names[z]
                ),
            );
        }

        for &v in &self.inputs {
            let (ri, ro) = self.raw_degree(v);
            if ri != 0 || ro != 1 {
                push(
                    ViolationKind::InputArity,
                    format!("input node {} has {ri} incoming and {ro} outgoing edges", self.names[v]),
                );
            }
        }
        for &v in &self.outputs {
            let (ri, ro) = self.raw_degree(v);
            if ri != 1 || ro != 0 {
                push(
                    ViolationKind::OutputArity,
                    format!("output node {} has {ri} incoming and {ro} outgoing edges", self.names[v]),
                );
            }
        }

        for v in 0..n {
            let mut want_in: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].1 == v).collect();
            let mut want_out: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].0 == v).collect();
            let mut got_in = self.in_order[v].clone();
            let mut got_out = self.out_order[v].clone();
            want_in.sort_unstable();
            want_out.sort_unstable();
            got_in.sort_unstable();
            got_out.sort_unstable();
            if got_in != want_in {
                push(
                    ViolationKind::Framing,
                    format!(
                        "incoming order of {} is {:?}, incident edges are {want_in:?}",
                        self.names[v], self.in_order[v]
                    ),
                );
            }
            if got_out != want_out {
                push(
                    ViolationKind::Framing,
                    format!(
                        "outgoing order of {} is {:?}, incident edges are {want_out:?}",
                        self.names[v], self.out_order[v]
                    ),
                );
            }
        }

        let mut seen = BTreeSet::new();
        for &v in self.inputs.iter().chain(&self.outputs) {
            if !seen.insert(v) {
                push(ViolationKind::Boundary, format!("node {} appears twice on the boundary", self.names[v]));
            }
        }
        out
    }

    fn raw_degree(&self, v: usize) -> (usize, usize) {
        let i = self.edges.iter().filter(|e| e.1 == v).count();
        let o = self.edges.iter().filter(|e| e.0 == v).count();
        (i, o)
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Fails with the first violation, if any.
    pub fn check(&self) -> Result<()> {
        match self.validate().first() {
            Some(v) => Err(CtcError::Graph(v.to_string())),
            None => Ok(()),
        }
    }

    /// Topological order of all nodes (smallest id first among ready nodes),
    /// or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indeg = vec![0usize; n];
        for &(_, t) in &self.edges {
            indeg[t] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &e in &self.out_order[v] {
                let t = self.edges[e].1;
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

/// A finite partial order given by its `≤` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalSet {
    leq: Vec<Vec<bool>>,
}

impl CausalSet {
    /// Checks reflexivity, antisymmetry and transitivity.
    pub fn new(leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = leq.len();
        if leq.iter().any(|row| row.len() != n) {
            return Err(CtcError::Graph("order relation must be square".into()));
        }
        for a in 0..n {
            if !leq[a][a] {
                return Err(CtcError::Graph(format!("element {a} is not below itself")));
            }
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return Err(CtcError::Graph(format!("elements {a} and {b} are mutually below each other")));
                }
                for c in 0..n {
                    if leq[a][b] && leq[b][c] && !leq[a][c] {
                        return Err(CtcError::Graph(format!("order is not transitive at {a} <= {b} <= {c}")));
                    }
                }
            }
        }
        Ok(Self { leq })
    }

    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn relation(&self) -> &[Vec<bool>] {
        &self.leq
    }
}

/// Covering relation of the order as a graph without boundary nodes.
pub fn causal_set_to_graph(c: &CausalSet) -> FramedCausalGraph {
    let n = c.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || !c.leq(a, b) {
                continue;
            }
            let covered = (0..n).all(|z| z == a || z == b || !(c.leq(a, z) && c.leq(z, b)));
            if covered {
                edges.push((a, b));
            }
        }
    }
    let names = (0..n).map(|i| i.to_string()).collect();
    FramedCausalGraph::new(names, edges, vec![], vec![]).expect("edges reference existing nodes")
}

/// Reflexive-transitive closure of the edge relation of an acyclic graph.
pub fn graph_to_causal_set(g: &FramedCausalGraph) -> Result<CausalSet> {
    let order = g.topological_order().ok_or_else(|| CtcError::Graph("graph has a cycle".into()))?;
    let n = g.node_count();
    let mut leq = vec![vec![false; n]; n];
    for &v in order.iter().rev() {
        leq[v][v] = true;
        for &e in g.out_order(v) {
            let t = g.edges()[e].1;
            let row = leq[t].clone();
            for (x, r) in row.into_iter().enumerate() {
                if r {
                    leq[v][x] = true;
                }
            }
        }
    }
    CausalSet::new(leq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn chord_is_a_transitivity_violation() {
        let g = FramedCausalGraph::new(names(3), vec![(0, 1), (1, 2), (0, 2)], vec![], vec![]).unwrap();
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Transitivity);
    }

    #[test]
    fn input_with_two_edges_is_an_arity_violation() {
        let g = FramedCausalGraph::new(names(3), vec![(0, 1), (0, 2)], vec![0], vec![]).unwrap();
        assert!(g.validate().iter().any(|v| v.kind == ViolationKind::InputArity));
    }

    #[test]
    fn framing_must_cover_incident_edges() {
        let g = FramedCausalGraph::new(names(2), vec![(0, 1)], vec![0], vec![1])
            .unwrap()
            .with_framing([(1, vec![])], [])
            .unwrap();
        assert!(g.validate().iter().any(|v| v.kind == ViolationKind::Framing));
    }

    #[test]
    fn chain_poset_gives_path() {
        let leq = vec![vec![true, true, true], vec![false, true, true], vec![false, false, true]];
        let g = causal_set_to_graph(&CausalSet::new(leq).unwrap());
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn antichain_gives_isolated_nodes() {
        let leq = (0..4).map(|i| (0..4).map(|j| i == j).collect()).collect();
        let g = causal_set_to_graph(&CausalSet::new(leq).unwrap());
        assert!(g.edges().is_empty());
        assert_eq!(g.node_count(), 4);
    }

    #[test]
    fn cyclic_graph_has_no_causal_set() {
        let g = FramedCausalGraph::new(names(2), vec![(0, 1), (1, 0)], vec![], vec![]).unwrap();
        assert!(graph_to_causal_set(&g).is_err());
    }

    #[test]
    fn bad_orders_are_rejected() {
        assert!(CausalSet::new(vec![vec![true, true], vec![true, true]]).is_err());
        assert!(CausalSet::new(vec![vec![false]]).is_err());
    }
}

//! Simple-cycle enumeration (Johnson's algorithm) and loop locality.

use std::collections::BTreeSet;

use crate::error::{CtcError, Result};

use super::graph::FramedCausalGraph;

/// Enumeration stops with an error beyond this many cycles.
pub const CYCLE_CAP: usize = 10_000;

/// A directed cycle: `edges[k]` runs from `nodes[k]` to `nodes[k + 1]`
/// (wrapping). Rotated so that `nodes[0]` is its smallest node id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cycle {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

/// All simple cycles. Parallel edges give distinct cycles.
pub fn enumerate_simple_cycles(g: &FramedCausalGraph) -> Result<Vec<Cycle>> {
    let n = g.node_count();
    let mut cycles = Vec::new();
    for s in 0..n {
        // Johnson: circuits whose least node is `s`, inside the strongly
        // connected component of `s` in the subgraph on nodes >= s.
        let comp = component_of(g, s);
        if comp.iter().filter(|&&x| x).count() == 1 && !g.out_order(s).iter().any(|&e| g.edges()[e].1 == s) {
            continue;
        }
        let mut state = Johnson {
            g,
            allowed: comp,
            blocked: vec![false; n],
            b: vec![BTreeSet::new(); n],
            stack_nodes: Vec::new(),
            stack_edges: Vec::new(),
            start: s,
            out: &mut cycles,
        };
        state.circuit(s)?;
    }
    Ok(cycles)
}

struct Johnson<'a> {
    g: &'a FramedCausalGraph,
    allowed: Vec<bool>,
    blocked: Vec<bool>,
    b: Vec<BTreeSet<usize>>,
    stack_nodes: Vec<usize>,
    stack_edges: Vec<usize>,
    start: usize,
    out: &'a mut Vec<Cycle>,
}

impl Johnson<'_> {
    fn circuit(&mut self, v: usize) -> Result<bool> {
        let mut found = false;
        self.stack_nodes.push(v);
        self.blocked[v] = true;
        for &e in self.g.out_order(v) {
            let w = self.g.edges()[e].1;
            if !self.allowed[w] {
                continue;
            }
            if w == self.start {
                let mut edges = self.stack_edges.clone();
                edges.push(e);
                self.out.push(Cycle { nodes: self.stack_nodes.clone(), edges });
                if self.out.len() > CYCLE_CAP {
                    return Err(CtcError::CycleCap(CYCLE_CAP));
                }
                found = true;
            } else if !self.blocked[w] {
                self.stack_edges.push(e);
                if self.circuit(w)? {
                    found = true;
                }
                self.stack_edges.pop();
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &e in self.g.out_order(v) {
                let w = self.g.edges()[e].1;
                if self.allowed[w] {
                    self.b[w].insert(v);
                }
            }
        }
        self.stack_nodes.pop();
        Ok(found)
    }

    fn unblock(&mut self, u: usize) {
        self.blocked[u] = false;
        let waiting = std::mem::take(&mut self.b[u]);
        for w in waiting {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

/// Membership mask of the strongly connected component of `s` in the
/// subgraph induced by nodes `>= s`.
fn component_of(g: &FramedCausalGraph, s: usize) -> Vec<bool> {
    let n = g.node_count();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &(a, b) in g.edges() {
                let (from, to) = if forward { (a, b) } else { (b, a) };
                if from == u && to >= s && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    };
    let f = reach(true);
    let r = reach(false);
    (0..n).map(|v| f[v] && r[v]).collect()
}

/// Result of the loop-locality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvLocality {
    pub local: bool,
    pub cycles: Vec<Cycle>,
    /// For each cycle, its unique node of degree above 2, if any.
    pub interaction: Vec<Option<usize>>,
    /// First cycle with two or more high-degree nodes.
    pub offending: Option<(Cycle, Vec<usize>)>,
}

/// Every simple cycle may pass through at most one node whose in-degree plus
/// out-degree exceeds 2.
pub fn cv_locality(g: &FramedCausalGraph) -> Result<CvLocality> {
    let cycles = enumerate_simple_cycles(g)?;
    let mut interaction = Vec::with_capacity(cycles.len());
    let mut offending = None;
    for c in &cycles {
        let high: Vec<usize> = c.nodes.iter().copied().filter(|&v| g.degree(v) > 2).collect();
        if high.len() > 1 && offending.is_none() {
            offending = Some((c.clone(), high.clone()));
        }
        interaction.push(high.first().copied());
    }
    Ok(CvLocality { local: offending.is_none(), cycles, interaction, offending })
}

pub fn is_cv_local(g: &FramedCausalGraph) -> Result<bool> {
    Ok(cv_locality(g)?.local)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: Vec<(usize, usize)>, n: usize) -> FramedCausalGraph {
        FramedCausalGraph::new((0..n).map(|i| i.to_string()).collect(), edges, vec![], vec![]).unwrap()
    }

    #[test]
    fn acyclic_has_no_cycles() {
        assert!(enumerate_simple_cycles(&g(vec![(0, 1), (1, 2)], 3)).unwrap().is_empty());
        assert!(is_cv_local(&g(vec![(0, 1), (1, 2)], 3)).unwrap());
    }

    #[test]
    fn triangle_has_one_cycle() {
        let c = enumerate_simple_cycles(&g(vec![(0, 1), (1, 2), (2, 0)], 3)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].nodes, vec![0, 1, 2]);
        assert_eq!(c[0].edges, vec![0, 1, 2]);
    }

    #[test]
    fn two_disjoint_two_cycles() {
        let c = enumerate_simple_cycles(&g(vec![(0, 1), (1, 0), (2, 3), (3, 2)], 4)).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn parallel_edges_and_self_loops() {
        let c = enumerate_simple_cycles(&g(vec![(0, 1), (0, 1), (1, 0), (1, 1)], 2)).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn complete_graph_count() {
        // K4 has 20 simple directed cycles.
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        assert_eq!(enumerate_simple_cycles(&g(edges, 4)).unwrap().len(), 20);
    }

    #[test]
    fn locality_examples() {
        // in -> f -> out with a loop f -> c -> f.
        let local = FramedCausalGraph::new(
            ["in", "f", "c", "out"].map(String::from).to_vec(),
            vec![(0, 1), (1, 3), (1, 2), (2, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let r = cv_locality(&local).unwrap();
        assert!(r.local);
        assert_eq!(r.interaction, vec![Some(1)]);
        // in -> f -> g -> out with a loop g -> c -> f touching both.
        let bad = FramedCausalGraph::new(
            ["in", "f", "g", "c", "out"].map(String::from).to_vec(),
            vec![(0, 1), (1, 2), (2, 4), (2, 3), (3, 1)],
            vec![0],
            vec![4],
        )
        .unwrap();
        let r = cv_locality(&bad).unwrap();
        assert!(!r.local);
        assert_eq!(r.offending.unwrap().1, vec![1, 2]);
    }
}

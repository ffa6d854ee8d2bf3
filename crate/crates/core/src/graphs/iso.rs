//! Isomorphism of framed causal graphs through a canonical labelling.
//!
//! Boundary nodes are labelled first in their framing order. A traversal that
//! follows each node's outgoing then incoming edges in framing order labels
//! everything reachable from the boundary. Components without boundary nodes
//! are labelled from the start node giving the smallest code.

use std::collections::VecDeque;

use super::graph::FramedCausalGraph;

/// Per-node code: boundary role, outgoing edges as (target label, slot in the
/// target's incoming order), and the in-degree.
type NodeCode = (u8, Vec<(usize, usize)>, usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Code {
    inputs: usize,
    outputs: usize,
    nodes: Vec<NodeCode>,
}

fn in_slot(g: &FramedCausalGraph, e: usize) -> usize {
    let t = g.edges()[e].1;
    g.in_order(t).iter().position(|&x| x == e).unwrap_or(usize::MAX)
}

fn traverse(g: &FramedCausalGraph, labels: &mut [Option<usize>], order: &mut Vec<usize>, seeds: &[usize]) {
    let mut queue = VecDeque::new();
    for &s in seeds {
        if labels[s].is_none() {
            labels[s] = Some(order.len());
            order.push(s);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let next = g.out_order(u).iter().map(|&e| g.edges()[e].1).chain(g.in_order(u).iter().map(|&e| g.edges()[e].0));
        for v in next.collect::<Vec<_>>() {
            if labels[v].is_none() {
                labels[v] = Some(order.len());
                order.push(v);
                queue.push_back(v);
            }
        }
    }
}

fn node_code(g: &FramedCausalGraph, labels: &[Option<usize>], v: usize) -> NodeCode {
    let role = if g.inputs().contains(&v) {
        1
    } else if g.outputs().contains(&v) {
        2
    } else {
        0
    };
    let outs = g.out_order(v).iter().map(|&e| (labels[g.edges()[e].1].unwrap_or(usize::MAX), in_slot(g, e))).collect();
    (role, outs, g.in_order(v).len())
}

/// Canonical node sequence: `result[k]` is the node with label `k`.
/// Code, labels and visiting order of one traversal.
type Candidate = (Vec<NodeCode>, Vec<Option<usize>>, Vec<usize>);

fn canonical_order(g: &FramedCausalGraph) -> (Vec<usize>, Code) {
    let n = g.node_count();
    let mut labels = vec![None; n];
    let mut order = Vec::with_capacity(n);
    let seeds: Vec<usize> = g.inputs().iter().chain(g.outputs()).copied().collect();
    traverse(g, &mut labels, &mut order, &seeds);
    while order.len() < n {
        let mut best: Option<Candidate> = None;
        for start in (0..n).filter(|&v| labels[v].is_none()) {
            let mut l = labels.clone();
            let mut o = order.clone();
            traverse(g, &mut l, &mut o, &[start]);
            let code: Vec<NodeCode> = o[order.len()..].iter().map(|&v| node_code(g, &l, v)).collect();
            if best.as_ref().is_none_or(|b| code < b.0) {
                best = Some((code, l, o));
            }
        }
        let (_, l, o) = best.expect("an unlabelled node exists");
        labels = l;
        order = o;
    }
    let nodes = order.iter().map(|&v| node_code(g, &labels, v)).collect();
    (order, Code { inputs: g.inputs().len(), outputs: g.outputs().len(), nodes })
}

/// A node bijection `a → b` preserving edges, framing and boundary orders,
/// if one exists.
pub fn isomorphism(a: &FramedCausalGraph, b: &FramedCausalGraph) -> Option<Vec<usize>> {
    if a.node_count() != b.node_count() || a.edges().len() != b.edges().len() {
        return None;
    }
    let (oa, ca) = canonical_order(a);
    let (ob, cb) = canonical_order(b);
    if ca != cb {
        return None;
    }
    let mut map = vec![0; a.node_count()];
    for (k, &v) in oa.iter().enumerate() {
        map[v] = ob[k];
    }
    Some(map)
}

pub fn is_isomorphic(a: &FramedCausalGraph, b: &FramedCausalGraph) -> bool {
    isomorphism(a, b).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: Vec<(usize, usize)>, n: usize) -> FramedCausalGraph {
        FramedCausalGraph::new((0..n).map(|i| i.to_string()).collect(), edges, vec![], vec![]).unwrap()
    }

    #[test]
    fn relabelled_cycle_is_isomorphic() {
        let a = g(vec![(0, 1), (1, 2), (2, 0)], 3);
        let b = g(vec![(2, 1), (1, 0), (0, 2)], 3);
        let map = isomorphism(&a, &b).unwrap();
        for &(s, t) in a.edges() {
            assert!(b.edges().contains(&(map[s], map[t])));
        }
    }

    #[test]
    fn different_shapes_are_not_isomorphic() {
        let a = g(vec![(0, 1), (1, 2), (2, 0)], 3);
        let b = g(vec![(0, 1), (1, 0)], 3);
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn framing_matters() {
        let names: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let a = FramedCausalGraph::new(names.clone(), vec![(0, 2), (1, 2), (2, 3)], vec![0, 1], vec![3]).unwrap();
        let b = a.clone().with_framing([(2, vec![1, 0])], []).unwrap();
        assert!(!is_isomorphic(&a, &b));
    }
}

//! Sequential and parallel composition of framed causal graphs.

use crate::error::{CtcError, Result};

use super::graph::FramedCausalGraph;

/// `h ∘ g`: the outputs of `g` and the inputs of `h` are removed and every
/// pair of edges `x → b` (in `g`) and `b → y` (in `h`) through the same
/// boundary position becomes one edge `x → y`, in the framing slots of the
/// edges it replaces.
pub fn compose_graphs(h: &FramedCausalGraph, g: &FramedCausalGraph) -> Result<FramedCausalGraph> {
    let m = g.outputs().len();
    if h.inputs().len() != m {
        return Err(CtcError::Graph(format!("cannot compose: {} outputs into {} inputs", m, h.inputs().len())));
    }
    let g_out_edges: Vec<usize> = (0..m)
        .map(|b| g.output_edge(b).ok_or_else(|| CtcError::Graph(format!("output {b} has no edge"))))
        .collect::<Result<_>>()?;
    let h_in_edges: Vec<usize> = (0..m)
        .map(|b| h.input_edge(b).ok_or_else(|| CtcError::Graph(format!("input {b} has no edge"))))
        .collect::<Result<_>>()?;

    let mut names = Vec::new();
    let mut g_map = vec![usize::MAX; g.node_count()];
    for (v, slot) in g_map.iter_mut().enumerate() {
        if !g.outputs().contains(&v) {
            *slot = names.len();
            names.push(g.name(v).to_string());
        }
    }
    let mut h_map = vec![usize::MAX; h.node_count()];
    for (v, slot) in h_map.iter_mut().enumerate() {
        if !h.inputs().contains(&v) {
            *slot = names.len();
            names.push(h.name(v).to_string());
        }
    }

    let mut edges = Vec::new();
    let mut g_edge = vec![usize::MAX; g.edges().len()];
    for (e, &(x, y)) in g.edges().iter().enumerate() {
        if !g.outputs().contains(&y) {
            g_edge[e] = edges.len();
            edges.push((g_map[x], g_map[y]));
        }
    }
    let mut h_edge = vec![usize::MAX; h.edges().len()];
    for (e, &(x, y)) in h.edges().iter().enumerate() {
        if !h.inputs().contains(&x) {
            h_edge[e] = edges.len();
            edges.push((h_map[x], h_map[y]));
        }
    }
    for b in 0..m {
        let bridge = edges.len();
        let x = g.edges()[g_out_edges[b]].0;
        let y = h.edges()[h_in_edges[b]].1;
        edges.push((g_map[x], h_map[y]));
        g_edge[g_out_edges[b]] = bridge;
        h_edge[h_in_edges[b]] = bridge;
    }

    let n = names.len();
    let mut in_order = vec![Vec::new(); n];
    let mut out_order = vec![Vec::new(); n];
    for v in 0..g.node_count() {
        if g_map[v] != usize::MAX {
            in_order[g_map[v]] = g.in_order(v).iter().map(|&e| g_edge[e]).collect();
            out_order[g_map[v]] = g.out_order(v).iter().map(|&e| g_edge[e]).collect();
        }
    }
    for v in 0..h.node_count() {
        if h_map[v] != usize::MAX {
            in_order[h_map[v]] = h.in_order(v).iter().map(|&e| h_edge[e]).collect();
            out_order[h_map[v]] = h.out_order(v).iter().map(|&e| h_edge[e]).collect();
        }
    }
    let inputs = g.inputs().iter().map(|&v| g_map[v]).collect();
    let outputs = h.outputs().iter().map(|&v| h_map[v]).collect();
    Ok(FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order))
}

/// Disjoint union with `g`'s boundary before `h`'s.
pub fn tensor_graphs(g: &FramedCausalGraph, h: &FramedCausalGraph) -> FramedCausalGraph {
    let n = g.node_count();
    let ne = g.edges().len();
    let mut names = g.names().to_vec();
    names.extend(h.names().iter().cloned());
    let mut edges = g.edges().to_vec();
    edges.extend(h.edges().iter().map(|&(s, t)| (s + n, t + n)));
    let mut inputs = g.inputs().to_vec();
    inputs.extend(h.inputs().iter().map(|v| v + n));
    let mut outputs = g.outputs().to_vec();
    outputs.extend(h.outputs().iter().map(|v| v + n));
    let mut in_order: Vec<Vec<usize>> = (0..n).map(|v| g.in_order(v).to_vec()).collect();
    let mut out_order: Vec<Vec<usize>> = (0..n).map(|v| g.out_order(v).to_vec()).collect();
    for v in 0..h.node_count() {
        in_order.push(h.in_order(v).iter().map(|e| e + ne).collect());
        out_order.push(h.out_order(v).iter().map(|e| e + ne).collect());
    }
    FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order)
}

/// `n` wires, each an input node joined directly to an output node.
pub fn identity_graph(n: usize) -> FramedCausalGraph {
    let mut names: Vec<String> = (0..n).map(|i| format!("in{i}")).collect();
    names.extend((0..n).map(|i| format!("out{i}")));
    let edges = (0..n).map(|i| (i, n + i)).collect();
    FramedCausalGraph::new(names, edges, (0..n).collect(), (n..2 * n).collect()).expect("well-formed")
}

/// Exchanges a block of `n` wires with a block of `m` wires.
pub fn symmetry_graph(n: usize, m: usize) -> FramedCausalGraph {
    let k = n + m;
    let mut names: Vec<String> = (0..k).map(|i| format!("in{i}")).collect();
    names.extend((0..k).map(|i| format!("out{i}")));
    // Wires of the first block land after the `m` wires of the second.
    let target = |i: usize| if i < n { m + i } else { i - n };
    let edges = (0..k).map(|i| (i, k + target(i))).collect();
    FramedCausalGraph::new(names, edges, (0..k).collect(), (k..2 * k).collect()).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::super::iso::isomorphism;
    use super::*;

    fn one_node() -> FramedCausalGraph {
        let names = vec!["i".into(), "f".into(), "o".into()];
        FramedCausalGraph::new(names, vec![(0, 1), (1, 2)], vec![0], vec![2]).unwrap()
    }

    #[test]
    fn identity_is_valid() {
        assert!(identity_graph(2).is_valid());
    }

    #[test]
    fn unit_laws() {
        let g = one_node();
        let left = compose_graphs(&identity_graph(1), &g).unwrap();
        let right = compose_graphs(&g, &identity_graph(1)).unwrap();
        assert!(left.is_valid());
        assert!(isomorphism(&left, &g).is_some());
        assert!(isomorphism(&right, &g).is_some());
    }

    #[test]
    fn swap_twice_is_identity() {
        let s = symmetry_graph(1, 1);
        let ss = compose_graphs(&s, &s).unwrap();
        assert!(isomorphism(&ss, &identity_graph(2)).is_some());
        assert!(isomorphism(&s, &identity_graph(2)).is_none());
    }

    #[test]
    fn chaining_two_nodes_bridges_the_boundary() {
        let c = compose_graphs(&one_node(), &one_node()).unwrap();
        assert!(c.is_valid());
        assert_eq!(c.internal_nodes().len(), 2);
        assert_eq!(c.edges().len(), 3);
        let f1 = c.internal_nodes()[0];
        let f2 = c.internal_nodes()[1];
        assert!(c.edges().contains(&(f1, f2)));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        assert!(compose_graphs(&identity_graph(2), &one_node()).is_err());
    }
}

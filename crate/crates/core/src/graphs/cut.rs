//! Cutting loops open into fresh output/input node pairs, and gluing them back.

use crate::error::{CtcError, Result};

use super::cycles::{cv_locality, Cycle};
use super::graph::FramedCausalGraph;

/// Upper bound on the number of plans produced by [`all_cut_plans`].
pub const PLAN_CAP: usize = 4096;

/// One cut edge: the edge `x → y` became `x → output_node` (same edge id)
/// and `input_node → y` (edge id `new_edge`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub output_node: usize,
    pub input_node: usize,
    pub edge: usize,
    pub new_edge: usize,
    pub cycle: Cycle,
}

/// Pairings closed together: all loops through one interaction node, or a
/// single loop with no interaction node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingGroup {
    pub interaction: Option<usize>,
    pub pairings: Vec<Pairing>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutResult {
    pub cr_graph: FramedCausalGraph,
    pub groups: Vec<PairingGroup>,
}

impl CutResult {
    pub fn pairings(&self) -> impl Iterator<Item = &Pairing> {
        self.groups.iter().flat_map(|g| g.pairings.iter())
    }
}

fn default_edge(g: &FramedCausalGraph, c: &Cycle) -> usize {
    *c.edges.iter().min_by_key(|&&e| (g.edges()[e].0, g.edges()[e].1, e)).expect("cycles have edges")
}

/// Cuts every loop of a loop-local graph. `plan` lists one edge per loop;
/// by default each loop is cut at its lexicographically smallest edge.
pub fn cut_open(g: &FramedCausalGraph, plan: Option<&[usize]>) -> Result<CutResult> {
    let loc = cv_locality(g)?;
    if let Some((cycle, high)) = &loc.offending {
        return Err(CtcError::NotCvLocal { cycle: cycle.nodes.clone(), high_degree: high.len() });
    }
    let chosen: Vec<usize> = match plan {
        None => loc.cycles.iter().map(|c| default_edge(g, c)).collect(),
        Some(edges) => {
            for &e in edges {
                if !loc.cycles.iter().any(|c| c.edges.contains(&e)) {
                    return Err(CtcError::Graph(format!("plan edge {e} is not on a cycle")));
                }
            }
            loc.cycles
                .iter()
                .map(|c| {
                    let hits: Vec<usize> = c.edges.iter().copied().filter(|e| edges.contains(e)).collect();
                    match hits.as_slice() {
                        [e] => Ok(*e),
                        [] => Err(CtcError::Graph(format!("plan cuts no edge of the cycle through {:?}", c.nodes))),
                        _ => Err(CtcError::Graph(format!("plan cuts the cycle through {:?} more than once", c.nodes))),
                    }
                })
                .collect::<Result<_>>()?
        }
    };

    let mut groups: Vec<PairingGroup> = Vec::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for k in 0..loc.cycles.len() {
        let key = loc.interaction[k];
        let gi = match key.and_then(|v| groups.iter().position(|gr| gr.interaction == Some(v))) {
            Some(gi) => gi,
            None => {
                groups.push(PairingGroup { interaction: key, pairings: Vec::new() });
                groups.len() - 1
            }
        };
        order.push((gi, k));
    }
    order.sort_by_key(|&(gi, k)| (gi, k));

    let (mut names, mut edges) = (g.names().to_vec(), g.edges().to_vec());
    let mut inputs = g.inputs().to_vec();
    let mut outputs = g.outputs().to_vec();
    let mut in_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.in_order(v).to_vec()).collect();
    let mut out_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.out_order(v).to_vec()).collect();
    for (gi, k) in order {
        let e = chosen[k];
        let (x, y) = g.edges()[e];
        let o = names.len();
        names.push(format!("{}->{}:out", g.name(x), g.name(y)));
        let i = names.len();
        names.push(format!("{}->{}:in", g.name(x), g.name(y)));
        let f = edges.len();
        edges[e] = (x, o);
        edges.push((i, y));
        for slot in in_order[y].iter_mut() {
            if *slot == e {
                *slot = f;
            }
        }
        in_order.push(vec![e]);
        out_order.push(vec![]);
        in_order.push(vec![]);
        out_order.push(vec![f]);
        outputs.push(o);
        inputs.push(i);
        groups[gi].pairings.push(Pairing {
            output_node: o,
            input_node: i,
            edge: e,
            new_edge: f,
            cycle: loc.cycles[k].clone(),
        });
    }
    let cr_graph = FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order);
    Ok(CutResult { cr_graph, groups })
}

/// Glues every pairing back, removing the fresh nodes and edges.
pub fn reglue(cut: &CutResult) -> FramedCausalGraph {
    let g = &cut.cr_graph;
    let mut edges = g.edges().to_vec();
    let mut in_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.in_order(v).to_vec()).collect();
    let out_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.out_order(v).to_vec()).collect();
    let mut dead_nodes = vec![false; g.node_count()];
    let mut dead_edges = vec![false; edges.len()];
    for p in cut.pairings() {
        let y = g.edges()[p.new_edge].1;
        edges[p.edge].1 = y;
        for slot in in_order[y].iter_mut() {
            if *slot == p.new_edge {
                *slot = p.edge;
            }
        }
        dead_nodes[p.output_node] = true;
        dead_nodes[p.input_node] = true;
        dead_edges[p.new_edge] = true;
    }
    let node_map: Vec<usize> = renumber(&dead_nodes);
    let edge_map: Vec<usize> = renumber(&dead_edges);
    let keep_nodes = (0..g.node_count()).filter(|&v| !dead_nodes[v]);
    let names = keep_nodes.clone().map(|v| g.name(v).to_string()).collect();
    let new_edges =
        (0..edges.len()).filter(|&e| !dead_edges[e]).map(|e| (node_map[edges[e].0], node_map[edges[e].1])).collect();
    let map_list = |l: &[usize], m: &[usize], dead: &[bool]| -> Vec<usize> {
        l.iter().filter(|&&x| !dead[x]).map(|&x| m[x]).collect()
    };
    let inputs = map_list(g.inputs(), &node_map, &dead_nodes);
    let outputs = map_list(g.outputs(), &node_map, &dead_nodes);
    let ins = keep_nodes.clone().map(|v| map_list(&in_order[v], &edge_map, &dead_edges)).collect();
    let outs = keep_nodes.map(|v| map_list(&out_order[v], &edge_map, &dead_edges)).collect();
    FramedCausalGraph::from_parts(names, new_edges, inputs, outputs, ins, outs)
}

fn renumber(dead: &[bool]) -> Vec<usize> {
    let mut next = 0;
    dead.iter()
        .map(|&d| {
            let id = next;
            if !d {
                next += 1;
            }
            id
        })
        .collect()
}

/// Every way of choosing one edge per loop, up to [`PLAN_CAP`] plans.
pub fn all_cut_plans(g: &FramedCausalGraph) -> Result<Vec<Vec<usize>>> {
    let loc = cv_locality(g)?;
    let mut plans = vec![Vec::new()];
    for c in &loc.cycles {
        let mut next = Vec::new();
        for p in &plans {
            for &e in &c.edges {
                let mut q: Vec<usize> = p.clone();
                q.push(e);
                next.push(q);
                if next.len() > PLAN_CAP {
                    return Err(CtcError::CycleCap(PLAN_CAP));
                }
            }
        }
        plans = next;
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::super::iso::isomorphism;
    use super::*;

    fn loop_graph() -> FramedCausalGraph {
        FramedCausalGraph::new(
            ["in", "f", "c", "out"].map(String::from).to_vec(),
            vec![(0, 1), (1, 3), (1, 2), (2, 1)],
            vec![0],
            vec![3],
        )
        .unwrap()
    }

    #[test]
    fn single_loop_gives_one_pairing() {
        let cut = cut_open(&loop_graph(), None).unwrap();
        assert_eq!(cut.groups.len(), 1);
        assert_eq!(cut.groups[0].pairings.len(), 1);
        assert_eq!(cut.groups[0].interaction, Some(1));
        assert!(cut.cr_graph.is_acyclic());
        assert!(cut.cr_graph.is_valid(), "{:?}", cut.cr_graph.validate());
        assert_eq!(cut.cr_graph.inputs().len(), 2);
    }

    #[test]
    fn two_loops_through_one_node_share_a_group() {
        let g = FramedCausalGraph::new(
            ["in", "f", "a", "b", "out"].map(String::from).to_vec(),
            vec![(0, 1), (1, 4), (1, 2), (2, 1), (1, 3), (3, 1)],
            vec![0],
            vec![4],
        )
        .unwrap();
        let cut = cut_open(&g, None).unwrap();
        assert_eq!(cut.groups.len(), 1);
        assert_eq!(cut.groups[0].pairings.len(), 2);
    }

    #[test]
    fn acyclic_is_unchanged() {
        let g = super::super::smc::identity_graph(2);
        let cut = cut_open(&g, None).unwrap();
        assert!(cut.groups.is_empty());
        assert_eq!(cut.cr_graph, g);
    }

    #[test]
    fn reglue_roundtrip() {
        let g = loop_graph();
        for plan in all_cut_plans(&g).unwrap() {
            let cut = cut_open(&g, Some(&plan)).unwrap();
            let back = reglue(&cut);
            assert!(isomorphism(&back, &g).is_some());
        }
    }

    #[test]
    fn plan_edge_must_be_on_a_cycle() {
        assert!(cut_open(&loop_graph(), Some(&[0])).is_err());
    }
}

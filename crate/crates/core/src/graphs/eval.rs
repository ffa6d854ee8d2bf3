//! Diagrams over framed causal graphs and their evaluation.

use std::collections::BTreeSet;

use crate::channel::QChannel;
use crate::dctc::{self, DMixMorphism, ElementaryMorphism};
use crate::error::{CtcError, Result};
use crate::model::Model;
use crate::pctc::{self, MixSymMorphism, PctcOutcome};
use crate::state::DensityMatrix;

use super::cut::{cut_open, CutResult};
use super::cycles::{cv_locality, enumerate_simple_cycles};
use super::graph::FramedCausalGraph;

/// A graph with a system on every edge and a channel on every internal node.
#[derive(Debug, Clone)]
pub struct Diagram {
    graph: FramedCausalGraph,
    alpha: Vec<Vec<usize>>,
    beta: Vec<Option<QChannel>>,
}

impl Diagram {
    /// `beta` is indexed by node id and must be `Some` exactly on internal
    /// nodes, with input and output dims matching the framed edge systems.
    pub fn new(graph: FramedCausalGraph, alpha: Vec<Vec<usize>>, beta: Vec<Option<QChannel>>) -> Result<Self> {
        graph.check()?;
        if alpha.len() != graph.edges().len() {
            return Err(CtcError::InvalidDiagram(format!(
                "{} edge systems for {} edges",
                alpha.len(),
                graph.edges().len()
            )));
        }
        if beta.len() != graph.node_count() {
            return Err(CtcError::InvalidDiagram(format!(
                "{} node channels for {} nodes",
                beta.len(),
                graph.node_count()
            )));
        }
        if alpha.iter().flatten().any(|&d| d == 0) {
            return Err(CtcError::InvalidDiagram("edge system with dimension 0".into()));
        }
        for (v, b) in beta.iter().enumerate() {
            match (b, graph.is_boundary(v)) {
                (Some(_), true) => {
                    return Err(CtcError::InvalidDiagram(format!("boundary node {} has a channel", graph.name(v))))
                }
                (None, false) => {
                    return Err(CtcError::InvalidDiagram(format!("node {} has no channel", graph.name(v))))
                }
                (Some(ch), false) => {
                    let want_in: Vec<usize> = graph.in_order(v).iter().flat_map(|&e| alpha[e].clone()).collect();
                    let want_out: Vec<usize> = graph.out_order(v).iter().flat_map(|&e| alpha[e].clone()).collect();
                    if ch.in_dims() != want_in.as_slice() || ch.out_dims() != want_out.as_slice() {
                        return Err(CtcError::InvalidDiagram(format!(
                            "node {} has type {:?} -> {:?} but its edges carry {want_in:?} -> {want_out:?}",
                            graph.name(v),
                            ch.in_dims(),
                            ch.out_dims()
                        )));
                    }
                }
                (None, true) => {}
            }
        }
        Ok(Self { graph, alpha, beta })
    }

    pub fn graph(&self) -> &FramedCausalGraph {
        &self.graph
    }

    pub fn alpha(&self, e: usize) -> &[usize] {
        &self.alpha[e]
    }

    pub fn beta(&self, v: usize) -> Option<&QChannel> {
        self.beta[v].as_ref()
    }

    fn wire_dims(&self, edges: &[usize]) -> Vec<usize> {
        edges.iter().flat_map(|&e| self.alpha[e].iter().copied()).collect()
    }

    /// Systems on the input wires, in boundary order.
    pub fn in_dims(&self) -> Vec<usize> {
        let edges: Vec<usize> = (0..self.graph.inputs().len()).filter_map(|i| self.graph.input_edge(i)).collect();
        self.wire_dims(&edges)
    }

    pub fn out_dims(&self) -> Vec<usize> {
        let edges: Vec<usize> = (0..self.graph.outputs().len()).filter_map(|i| self.graph.output_edge(i)).collect();
        self.wire_dims(&edges)
    }

    /// The diagram over the cut-open graph: each fresh edge carries the
    /// system of the edge it was cut from.
    pub fn cut(&self, plan: Option<&[usize]>) -> Result<(Diagram, CutResult)> {
        let cut = cut_open(&self.graph, plan)?;
        Ok((self.over_cut(&cut)?, cut))
    }

    fn over_cut(&self, cut: &CutResult) -> Result<Diagram> {
        let mut alpha = self.alpha.clone();
        alpha.resize(cut.cr_graph.edges().len(), Vec::new());
        for p in cut.pairings() {
            alpha[p.new_edge] = self.alpha[p.edge].clone();
        }
        let mut beta = self.beta.clone();
        beta.resize(cut.cr_graph.node_count(), None);
        Diagram::new(cut.cr_graph.clone(), alpha, beta)
    }
}

/// Processes that can be wired together by the layered evaluator.
pub trait Process: Sized + Clone {
    fn identity(dims: &[usize]) -> Self;
    fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self>;
    fn from_channel(ch: &QChannel) -> Result<Self>;
    /// `next ∘ self`.
    fn then(&self, next: &Self) -> Result<Self>;
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Process for QChannel {
    fn identity(dims: &[usize]) -> Self {
        QChannel::identity(dims.to_vec())
    }

    fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self> {
        QChannel::permutation(dims, perm)
    }

    fn from_channel(ch: &QChannel) -> Result<Self> {
        Ok(ch.clone())
    }

    fn then(&self, next: &Self) -> Result<Self> {
        QChannel::then(self, next)
    }

    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(QChannel::tensor(self, other))
    }
}

impl Process for DMixMorphism {
    fn identity(dims: &[usize]) -> Self {
        DMixMorphism::identity(dims.to_vec())
    }

    fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self> {
        dctc::embed(&QChannel::permutation(dims, perm)?)
    }

    fn from_channel(ch: &QChannel) -> Result<Self> {
        dctc::embed(ch)
    }

    /// Concatenation, with adjacent loop-free steps merged into one step.
    fn then(&self, next: &Self) -> Result<Self> {
        let joined = dctc::compose_dmix(next, self)?;
        let mut steps: Vec<ElementaryMorphism> = Vec::with_capacity(joined.steps().len());
        for s in joined.steps() {
            match steps.last_mut() {
                Some(prev) if prev.cv_dims().is_empty() && s.cv_dims().is_empty() => {
                    *prev = ElementaryMorphism::new(prev.phi().then(s.phi())?, vec![])?;
                }
                _ => steps.push(s.clone()),
            }
        }
        if steps.is_empty() {
            return Ok(joined);
        }
        DMixMorphism::from_steps(steps)
    }

    fn tensor(&self, other: &Self) -> Result<Self> {
        dctc::tensor_dmix(self, other)
    }
}

impl Process for MixSymMorphism {
    fn identity(dims: &[usize]) -> Self {
        MixSymMorphism::identity(dims.to_vec())
    }

    fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self> {
        pctc::mixsym_lift(&QChannel::permutation(dims, perm)?)
    }

    fn from_channel(ch: &QChannel) -> Result<Self> {
        pctc::mixsym_lift(ch)
    }

    fn then(&self, next: &Self) -> Result<Self> {
        pctc::mixsym_compose(next, self)
    }

    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(MixSymMorphism::tensor(self, other))
    }
}

/// Evaluates an acyclic graph layer by layer. Each internal node, in
/// topological order, receives its incoming wires at the front of the live
/// wire list (through a permutation) and is tensored with the identity on the
/// remaining wires; its outgoing wires then replace its incoming ones at the
/// front.
pub fn eval_layered<P: Process>(
    graph: &FramedCausalGraph,
    alpha: &[Vec<usize>],
    mut node: impl FnMut(usize) -> Result<P>,
) -> Result<P> {
    let order = graph
        .topological_order()
        .ok_or_else(|| CtcError::InvalidDiagram("layered evaluation needs an acyclic graph".into()))?;
    let dims_of = |wires: &[usize]| -> Vec<usize> { wires.iter().flat_map(|&e| alpha[e].iter().copied()).collect() };
    let mut live: Vec<usize> = (0..graph.inputs().len())
        .map(|i| graph.input_edge(i).ok_or_else(|| CtcError::InvalidDiagram(format!("input {i} has no edge"))))
        .collect::<Result<_>>()?;
    let mut acc = P::identity(&dims_of(&live));
    for v in order {
        if graph.is_boundary(v) {
            continue;
        }
        let ins = graph.in_order(v);
        let rest: Vec<usize> = live.iter().copied().filter(|e| !ins.contains(e)).collect();
        let target: Vec<usize> = ins.iter().chain(&rest).copied().collect();
        acc = route(acc, &live, &target, alpha)?;
        let step = node(v)?.tensor(&P::identity(&dims_of(&rest)))?;
        acc = acc.then(&step)?;
        live = graph.out_order(v).iter().chain(&rest).copied().collect();
    }
    let target: Vec<usize> = (0..graph.outputs().len())
        .map(|i| graph.output_edge(i).ok_or_else(|| CtcError::InvalidDiagram(format!("output {i} has no edge"))))
        .collect::<Result<_>>()?;
    route(acc, &live, &target, alpha)
}

/// Appends the wire permutation taking `live` to `target` (same wire set).
fn route<P: Process>(acc: P, live: &[usize], target: &[usize], alpha: &[Vec<usize>]) -> Result<P> {
    if live == target {
        return Ok(acc);
    }
    let a: BTreeSet<usize> = live.iter().copied().collect();
    let b: BTreeSet<usize> = target.iter().copied().collect();
    if a != b || live.len() != target.len() {
        return Err(CtcError::InvalidDiagram(format!("wires {live:?} cannot be routed to {target:?}")));
    }
    let mut offsets = Vec::with_capacity(live.len());
    let mut next = 0;
    for &e in live {
        offsets.push(next);
        next += alpha[e].len();
    }
    let dims: Vec<usize> = live.iter().flat_map(|&e| alpha[e].iter().copied()).collect();
    let mut perm = Vec::with_capacity(dims.len());
    for &e in target {
        let k = live.iter().position(|&x| x == e).expect("same wire set");
        perm.extend(offsets[k]..offsets[k] + alpha[e].len());
    }
    acc.then(&P::permutation(&dims, &perm)?)
}

/// The channel of a loop-free diagram.
pub fn eval_cr_diagram(d: &Diagram) -> Result<QChannel> {
    if !d.graph.is_acyclic() {
        return Err(CtcError::InvalidDiagram("graph has a cycle; cut it open first".into()));
    }
    eval_layered(&d.graph, &d.alpha, |v| Ok(d.beta[v].clone().expect("internal node")))
}

/// The morphism a diagram denotes under one of the two loop semantics.
#[derive(Debug, Clone)]
pub enum ModelMorphism {
    Dctc(DMixMorphism),
    Pctc(MixSymMorphism),
}

impl ModelMorphism {
    pub fn model(&self) -> Model {
        match self {
            Self::Dctc(_) => Model::Dctc,
            Self::Pctc(_) => Model::Pctc,
        }
    }

    /// Applies the morphism to a state; loop-fixed-point outputs always have
    /// weight 1.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<PctcOutcome> {
        match self {
            Self::Dctc(m) => Ok(PctcOutcome::State { state: dctc::eval_dmix(m, rho)?, weight: 1.0 }),
            Self::Pctc(m) => m.apply(rho),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// One edge per loop; defaults to the smallest edge of each loop.
    pub cut_plan: Option<Vec<usize>>,
    /// Allow post-selected evaluation of graphs that are not loop-local by
    /// closing all cut wires at once.
    pub experimental_trace: bool,
}

pub fn eval_diagram(d: &Diagram, model: Model) -> Result<ModelMorphism> {
    eval_diagram_with(d, model, &EvalOptions::default())
}

/// Cuts the loops open and closes each pairing group with one application of
/// the model's loop operation. The group's interaction node and the chain
/// nodes on its loops form a region whose channel `H ⊗ C → K ⊗ C` is computed
/// from the cut-open diagram; the region is then replaced by the closed-loop
/// morphism and the remaining loop-free diagram is evaluated in the model's
/// category.
pub fn eval_diagram_with(d: &Diagram, model: Model, opts: &EvalOptions) -> Result<ModelMorphism> {
    let loc = cv_locality(&d.graph)?;
    if let Some((cycle, high)) = &loc.offending {
        if model == Model::Pctc && opts.experimental_trace {
            return eval_traced(d);
        }
        return Err(CtcError::NotCvLocal { cycle: cycle.clone().nodes, high_degree: high.len() });
    }
    let (cut_diagram, cut) = d.cut(opts.cut_plan.as_deref())?;
    let g = &d.graph;

    let mut region_of = vec![None; g.node_count()];
    let mut cycle_edges = BTreeSet::new();
    let mut closed: Vec<ModelMorphism> = Vec::with_capacity(cut.groups.len());
    let mut reps = Vec::with_capacity(cut.groups.len());
    for (gi, group) in cut.groups.iter().enumerate() {
        let mut region = BTreeSet::new();
        for p in &group.pairings {
            region.extend(p.cycle.nodes.iter().copied());
            cycle_edges.extend(p.cycle.edges.iter().copied());
        }
        for &v in &region {
            region_of[v] = Some(gi);
        }
        reps.push(group.interaction);
        let phi = region_channel(&cut_diagram, &cut, gi, &region)?;
        let cv: Vec<usize> = group.pairings.iter().flat_map(|p| d.alpha[p.edge].iter().copied()).collect();
        let label = group.interaction.map_or_else(|| format!("loop{gi}"), |v| g.name(v).to_string());
        closed.push(match model {
            Model::Dctc => {
                ModelMorphism::Dctc(DMixMorphism::elementary(ElementaryMorphism::new(phi, cv)?.with_label(label)))
            }
            Model::Pctc => ModelMorphism::Pctc(pctc::mixsym_lift(&pctc::pctc_superop(&phi, &cv)?)?),
        });
    }

    // Collapse each region to one node: the interaction node keeps its
    // non-loop edges, loops without one become isolated nodes.
    let mut names = Vec::new();
    let mut node_map = vec![usize::MAX; g.node_count()];
    let mut group_node = vec![usize::MAX; cut.groups.len()];
    for v in 0..g.node_count() {
        match region_of[v] {
            None => {
                node_map[v] = names.len();
                names.push(g.name(v).to_string());
            }
            Some(gi) if reps[gi] == Some(v) => {
                node_map[v] = names.len();
                group_node[gi] = names.len();
                names.push(g.name(v).to_string());
            }
            Some(_) => {}
        }
    }
    for (gi, node) in group_node.iter_mut().enumerate() {
        if *node == usize::MAX {
            *node = names.len();
            names.push(format!("loop{gi}"));
        }
    }
    let mut edge_map = vec![usize::MAX; g.edges().len()];
    let mut edges = Vec::new();
    let mut alpha = Vec::new();
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        if cycle_edges.contains(&e) {
            continue;
        }
        edge_map[e] = edges.len();
        edges.push((node_map[s], node_map[t]));
        alpha.push(d.alpha[e].clone());
    }
    let n = names.len();
    let mut in_order = vec![Vec::new(); n];
    let mut out_order = vec![Vec::new(); n];
    for v in 0..g.node_count() {
        if node_map[v] == usize::MAX {
            continue;
        }
        let keep = |l: &[usize]| -> Vec<usize> {
            l.iter().filter(|&&e| edge_map[e] != usize::MAX).map(|&e| edge_map[e]).collect()
        };
        in_order[node_map[v]] = keep(g.in_order(v));
        out_order[node_map[v]] = keep(g.out_order(v));
    }
    let inputs = g.inputs().iter().map(|&v| node_map[v]).collect();
    let outputs = g.outputs().iter().map(|&v| node_map[v]).collect();
    let collapsed = FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order);

    let group_at = |v: usize| group_node.iter().position(|&x| x == v);
    let beta_at = |v: usize| -> QChannel {
        let orig = node_map.iter().position(|&x| x == v).expect("collapsed node has an original");
        d.beta[orig].clone().expect("internal node")
    };
    match model {
        Model::Dctc => {
            let m = eval_layered(&collapsed, &alpha, |v| match group_at(v) {
                Some(gi) => match &closed[gi] {
                    ModelMorphism::Dctc(m) => Ok(m.clone()),
                    ModelMorphism::Pctc(_) => unreachable!("model is fixed per evaluation"),
                },
                None => dctc::embed(&beta_at(v)),
            })?;
            Ok(ModelMorphism::Dctc(m))
        }
        Model::Pctc => {
            let m = eval_layered(&collapsed, &alpha, |v| match group_at(v) {
                Some(gi) => match &closed[gi] {
                    ModelMorphism::Pctc(m) => Ok(m.clone()),
                    ModelMorphism::Dctc(_) => unreachable!("model is fixed per evaluation"),
                },
                None => pctc::mixsym_lift(&beta_at(v)),
            })?;
            Ok(ModelMorphism::Pctc(m))
        }
    }
}

/// Channel `H ⊗ C → K ⊗ C` of one region of the cut-open diagram. `H` and
/// `K` are the interaction node's non-loop wires in framing order; `C` is the
/// group's cut wires in pairing order.
fn region_channel(cut_diagram: &Diagram, cut: &CutResult, gi: usize, region: &BTreeSet<usize>) -> Result<QChannel> {
    let g = &cut.cr_graph;
    let group = &cut.groups[gi];
    let cut_in: Vec<usize> = group.pairings.iter().map(|p| p.new_edge).collect();
    let cut_out: Vec<usize> = group.pairings.iter().map(|p| p.edge).collect();
    let (h_edges, k_edges) = match group.interaction {
        Some(v) => (
            g.in_order(v)
                .iter()
                .copied()
                .filter(|e| !cut_in.contains(e) && !region.contains(&g.edges()[*e].0))
                .collect(),
            g.out_order(v)
                .iter()
                .copied()
                .filter(|e| !cut_out.contains(e) && !region.contains(&g.edges()[*e].1))
                .collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let in_edges: Vec<usize> = h_edges.iter().chain(&cut_in).copied().collect();
    let out_edges: Vec<usize> = k_edges.iter().chain(&cut_out).copied().collect();

    // Sub-graph: region nodes, one fresh input per in-edge, one fresh output
    // per out-edge.
    let region_nodes: Vec<usize> = region.iter().copied().collect();
    let local = |v: usize| region_nodes.iter().position(|&x| x == v);
    let mut names: Vec<String> = region_nodes.iter().map(|&v| g.name(v).to_string()).collect();
    let mut edges = Vec::new();
    let mut alpha = Vec::new();
    let mut edge_map = std::collections::BTreeMap::new();
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        if let (Some(a), Some(b)) = (local(s), local(t)) {
            edge_map.insert(e, edges.len());
            edges.push((a, b));
            alpha.push(cut_diagram.alpha[e].clone());
        }
    }
    let mut inputs = Vec::new();
    for &e in &in_edges {
        let node = names.len();
        names.push(format!("{}:in", g.name(g.edges()[e].0)));
        inputs.push(node);
        edge_map.insert(e, edges.len());
        edges.push((node, local(g.edges()[e].1).expect("in-edge enters the region")));
        alpha.push(cut_diagram.alpha[e].clone());
    }
    let mut outputs = Vec::new();
    for &e in &out_edges {
        let node = names.len();
        names.push(format!("{}:out", g.name(g.edges()[e].1)));
        outputs.push(node);
        edge_map.insert(e, edges.len());
        edges.push((local(g.edges()[e].0).expect("out-edge leaves the region"), node));
        alpha.push(cut_diagram.alpha[e].clone());
    }
    let n = names.len();
    let mut in_order = vec![Vec::new(); n];
    let mut out_order = vec![Vec::new(); n];
    for (k, &v) in region_nodes.iter().enumerate() {
        let map = |l: &[usize]| -> Result<Vec<usize>> {
            l.iter()
                .map(|e| {
                    edge_map.get(e).copied().ok_or_else(|| {
                        CtcError::InvalidDiagram(format!("loop node {} has an edge leaving its region", g.name(v)))
                    })
                })
                .collect()
        };
        in_order[k] = map(g.in_order(v))?;
        out_order[k] = map(g.out_order(v))?;
    }
    for (k, &node) in inputs.iter().enumerate() {
        out_order[node] = vec![edge_map[&in_edges[k]]];
    }
    for (k, &node) in outputs.iter().enumerate() {
        in_order[node] = vec![edge_map[&out_edges[k]]];
    }
    let sub = FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order);
    eval_layered(&sub, &alpha, |k| Ok(cut_diagram.beta[region_nodes[k]].clone().expect("internal node")))
}

/// Post-selected evaluation through a single trace over every cut wire.
fn eval_traced(d: &Diagram) -> Result<ModelMorphism> {
    let g = &d.graph;
    let cycles = enumerate_simple_cycles(g)?;
    let mut chosen: Vec<usize> = Vec::new();
    for c in &cycles {
        if !c.edges.iter().any(|e| chosen.contains(e)) {
            chosen.push(*c.edges.iter().min().expect("cycles have edges"));
        }
    }
    let mut names = g.names().to_vec();
    let mut edges = g.edges().to_vec();
    let mut alpha = d.alpha.clone();
    let mut beta = d.beta.clone();
    let mut inputs = g.inputs().to_vec();
    let mut outputs = g.outputs().to_vec();
    let mut in_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.in_order(v).to_vec()).collect();
    let mut out_order: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.out_order(v).to_vec()).collect();
    let mut cv = Vec::new();
    for &e in &chosen {
        let (x, y) = g.edges()[e];
        let o = names.len();
        names.push(format!("{}->{}:out", g.name(x), g.name(y)));
        let i = names.len();
        names.push(format!("{}->{}:in", g.name(x), g.name(y)));
        let f = edges.len();
        edges[e] = (x, o);
        edges.push((i, y));
        alpha.push(d.alpha[e].clone());
        cv.extend(d.alpha[e].iter().copied());
        for slot in in_order[y].iter_mut() {
            if *slot == e {
                *slot = f;
            }
        }
        in_order.push(vec![e]);
        out_order.push(vec![]);
        in_order.push(vec![]);
        out_order.push(vec![f]);
        beta.push(None);
        beta.push(None);
        outputs.push(o);
        inputs.push(i);
    }
    let graph = FramedCausalGraph::from_parts(names, edges, inputs, outputs, in_order, out_order);
    let phi = eval_cr_diagram(&Diagram::new(graph, alpha, beta)?)?;
    Ok(ModelMorphism::Pctc(pctc::mixsym_lift(&pctc::pctc_superop(&phi, &cv)?)?))
}

//! Framed causal graphs: the intermediate representation for circuits with
//! loops.

pub mod cut;
pub mod cycles;
pub mod eval;
pub mod graph;
pub mod iso;
pub mod smc;

pub use cut::{all_cut_plans, cut_open, reglue, CutResult, Pairing, PairingGroup};
pub use cycles::{cv_locality, enumerate_simple_cycles, is_cv_local, CvLocality, Cycle};
pub use eval::{
    eval_cr_diagram, eval_diagram, eval_diagram_with, eval_layered, Diagram, EvalOptions, ModelMorphism, Process,
};
pub use graph::{causal_set_to_graph, graph_to_causal_set, CausalSet, FramedCausalGraph, Violation, ViolationKind};
pub use iso::{is_isomorphic, isomorphism};
pub use smc::{compose_graphs, identity_graph, symmetry_graph, tensor_graphs};

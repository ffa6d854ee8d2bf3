//! Simulation of quantum process theories with closed timelike curves.
//!
//! Two loop semantics are provided: the maximal-entropy fixed-point rule
//! ([`dctc`]) and the post-selected teleportation rule ([`pctc`]). Circuits
//! with loops are described as framed causal graphs ([`graphs`]) and evaluated
//! under either semantics.

pub mod axioms;
pub mod channel;
pub mod dctc;
pub mod error;
pub mod format;
pub mod gates;
pub mod graphs;
pub mod linalg;
pub mod model;
pub mod pctc;
pub mod random;
pub mod scenarios;
pub mod state;

pub use axioms::{run_axiom_suite, Axiom, AxiomConfig, AxiomReport, Verdict};
pub use channel::{apply_channel, channel_from_unitary, compose, partial_trace_channel, QChannel, SuperMatrix};
pub use dctc::{dctc_apply, eval_dmix, DMixMorphism, ElementaryMorphism};
pub use error::{CtcError, Result};
pub use format::{parse_scenario, run_file, RunReport, ScenarioFile};
pub use gates::{make_gate, GateSpec};
pub use graphs::{eval_diagram, Diagram, FramedCausalGraph};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use model::Model;
pub use pctc::{pctc_apply, MixSymMorphism, PctcOutcome};
pub use random::{random_cptp, RandomChannelSpec};
pub use state::{fidelity, trace_distance, von_neumann_entropy, DensityMatrix};

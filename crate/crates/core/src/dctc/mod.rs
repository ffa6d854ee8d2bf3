//! Loop semantics by maximal-entropy fixed points.

pub mod dmix;
pub mod solver;

pub use dmix::{
    as_channel, compose_dmix, dctc_apply, dctc_apply_full, embed, equiv_dmix, eval_dmix, eval_dmix_full,
    induced_cv_channel, probe_states, tensor_dmix, tensor_elementary, DMixMorphism, DctcOutcome, DmixEvaluation,
    ElementaryMorphism, Equivalence, ProbeConfig,
};
pub use solver::{
    fixed_point_space, lazy_fixed_point, max_entropy_fixed_point, solve_max_entropy, FixedPointSolution,
    FixedPointSpace, SolverDiagnostics, SolverOptions,
};

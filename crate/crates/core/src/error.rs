use thiserror::Error;

/// Errors raised by the simulator.
///
/// Non-normalizable post-selection outcomes are not errors; they are modelled
/// as values (see [`crate::pctc::PctcOutcome`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("invalid arity for `{gate}`: {detail}")]
    InvalidArity { gate: String, detail: String },
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: u64, residual: f64 },
    #[error("graph error: {0}")]
    Graph(String),
    #[error("graph is not CV-local: cycle {cycle:?} has {high_degree} nodes of degree > 2")]
    NotCvLocal { cycle: Vec<usize>, high_degree: usize },
    #[error("cycle enumeration exceeded the cap of {0} cycles")]
    CycleCap(usize),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
}

pub type Result<T> = std::result::Result<T, CtcError>;

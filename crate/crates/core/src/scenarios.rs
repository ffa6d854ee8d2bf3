//! The worked examples: constructors, expected outcomes and evaluation.

use rand::Rng;

use crate::channel::QChannel;
use crate::dctc::{dctc_apply_full, ElementaryMorphism, SolverOptions};
use crate::error::{CtcError, Result};
use crate::gates::{self, GateSpec};
use crate::graphs::{eval_diagram, Diagram, FramedCausalGraph};
use crate::linalg::{self, c, ComplexMatrix};
use crate::model::Model;
use crate::pctc::PctcOutcome;
use crate::random;
use crate::state::{fidelity, trace_distance, DensityMatrix};

/// Tolerance used when comparing a scenario's output with its expectation.
pub const SCENARIO_TOL: f64 = 1e-8;

/// Largest loop length evaluated exactly by the cloning constructions.
pub const CLONER_ENGINE_MAX: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    State(DensityMatrix),
    NonNormalizable,
}

#[derive(Debug, Clone)]
pub struct ScenarioCase {
    pub label: String,
    pub input: DensityMatrix,
    pub expected: Option<Expected>,
}

impl ScenarioCase {
    fn new(label: impl Into<String>, input: DensityMatrix, expected: Option<Expected>) -> Self {
        Self { label: label.into(), input, expected }
    }
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub label: String,
    pub outcome: PctcOutcome,
    /// Trace distance to the expected state, `0` or `1` for an expected
    /// non-normalizable outcome, `None` without an expectation.
    pub deviation: Option<f64>,
}

impl CaseResult {
    pub fn passed(&self, tol: f64) -> bool {
        self.deviation.is_none_or(|d| d <= tol)
    }
}

/// A diagram together with a semantics, inputs and expected outputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: Model,
    pub diagram: Diagram,
    /// The interaction, when the diagram is a single loop around it.
    pub morphism: Option<ElementaryMorphism>,
    pub cases: Vec<ScenarioCase>,
}

impl Scenario {
    /// Same diagram and inputs under another semantics, with expectations
    /// that only hold for the original one dropped.
    pub fn with_model(mut self, model: Model) -> Self {
        if model != self.model {
            for case in &mut self.cases {
                case.expected = None;
            }
            self.model = model;
        }
        self
    }

    pub fn run(&self) -> Result<Vec<CaseResult>> {
        let m = eval_diagram(&self.diagram, self.model)?;
        self.cases
            .iter()
            .map(|case| {
                let outcome = m.apply(&case.input)?;
                let deviation = match (&case.expected, &outcome) {
                    (None, _) => None,
                    (Some(Expected::State(want)), PctcOutcome::State { state, .. }) => {
                        Some(trace_distance(state, want)?)
                    }
                    (Some(Expected::NonNormalizable), PctcOutcome::NonNormalizable { .. }) => Some(0.0),
                    _ => Some(1.0),
                };
                Ok(CaseResult { label: case.label.clone(), outcome, deviation })
            })
            .collect()
    }
}

/// Unitary on `n` qubits sending the basis state with bits `x` to `f(x)`;
/// bit 0 is the first qubit.
fn qubit_basis_map(n: usize, f: impl Fn(&[u8]) -> Vec<u8>) -> ComplexMatrix {
    let d = 1usize << n;
    let mut u = ComplexMatrix::zeros(d, d);
    for x in 0..d {
        let bits: Vec<u8> = (0..n).map(|q| ((x >> (n - 1 - q)) & 1) as u8).collect();
        let y = f(&bits).iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        u[(y, x)] = c(1.0, 0.0);
    }
    u
}

fn dephase(d: usize) -> QChannel {
    gates::make_gate(&GateSpec::DephaseZ(d)).expect("dephasing is valid")
}

fn controlled_sum(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let k = blocks.len();
    let d = blocks[0].nrows();
    let mut u = ComplexMatrix::zeros(k * d, k * d);
    for (i, b) in blocks.iter().enumerate() {
        u.view_mut((i * d, i * d), (d, d)).copy_from(b);
    }
    u
}

/// A diagram with one input and one output wire per CR subsystem of `e` and
/// a self-loop carrying its CV systems.
pub fn loop_diagram(e: &ElementaryMorphism) -> Result<Diagram> {
    let h = e.h_dims();
    let k = e.k_dims();
    let v = h.len();
    let mut names: Vec<String> = (0..h.len()).map(|i| format!("in{i}")).collect();
    names.push("v".into());
    names.extend((0..k.len()).map(|i| format!("out{i}")));
    let mut edges: Vec<(usize, usize)> = (0..h.len()).map(|i| (i, v)).collect();
    edges.extend((0..k.len()).map(|i| (v, v + 1 + i)));
    let mut alpha: Vec<Vec<usize>> = h.iter().chain(k).map(|&d| vec![d]).collect();
    if !e.cv_dims().is_empty() {
        edges.push((v, v));
        alpha.push(e.cv_dims().to_vec());
    }
    let inputs = (0..h.len()).collect();
    let outputs = (v + 1..v + 1 + k.len()).collect();
    let graph = FramedCausalGraph::new(names, edges, inputs, outputs)?;
    let mut beta = vec![None; graph.node_count()];
    beta[v] = Some(e.phi().clone());
    Diagram::new(graph, alpha, beta)
}

fn loop_scenario(
    name: &str,
    description: &str,
    model: Model,
    e: ElementaryMorphism,
    cases: Vec<ScenarioCase>,
) -> Result<Scenario> {
    Ok(Scenario {
        name: name.into(),
        description: description.into(),
        model,
        diagram: loop_diagram(&e)?,
        morphism: Some(e),
        cases,
    })
}

/// `|a, c⟩ ↦ |c, a ⊕ c⟩` on (CR, CV): a CNOT controlled by the CV qubit
/// followed by a swap.
pub fn grandfather_unitary() -> ComplexMatrix {
    qubit_basis_map(2, |b| vec![b[1], b[0] ^ b[1]])
}

/// The grandfather interaction with a computational-basis readout of the CR
/// output.
pub fn grandfather_morphism() -> ElementaryMorphism {
    let u = QChannel::from_unitary(grandfather_unitary(), vec![2, 2]).expect("unitary");
    let phi = u.then(&dephase(2).tensor(&QChannel::identity(vec![2]))).expect("types agree");
    ElementaryMorphism::new(phi, vec![2]).expect("CPTP").with_label("grandfather")
}

pub fn grandfather() -> Result<Scenario> {
    let mixed = DensityMatrix::maximally_mixed(vec![2]);
    let cases = [
        ("|0>", DensityMatrix::qubit_zero()),
        ("|1>", DensityMatrix::qubit_one()),
        ("|+>", DensityMatrix::qubit_plus()),
        ("|->", DensityMatrix::qubit_minus()),
    ]
    .into_iter()
    .map(|(l, rho)| ScenarioCase::new(l, rho, Some(Expected::State(mixed.clone()))))
    .collect();
    loop_scenario(
        "grandfather",
        "a qubit that flips the value sent back to it; every input leaves maximally mixed",
        Model::Dctc,
        grandfather_morphism(),
        cases,
    )
}

/// The grandfather interaction under post-selection: `|0⟩` and `|+⟩` lead to
/// the uniform readout while `|1⟩` cannot happen.
pub fn grandfather_pctc() -> Result<Scenario> {
    let mut s = grandfather()?.with_model(Model::Pctc);
    let mixed = DensityMatrix::maximally_mixed(vec![2]);
    let expect = [
        Some(Expected::State(mixed.clone())),
        Some(Expected::NonNormalizable),
        Some(Expected::State(mixed.clone())),
        Some(Expected::State(mixed)),
    ];
    for (case, want) in s.cases.iter_mut().zip(expect) {
        case.expected = want;
    }
    Ok(s)
}

/// Deviation of the ancilla marginal from the untouched one when the
/// post-selected grandfather interaction acts on half of a Bell pair.
pub fn grandfather_terminality_witness() -> Result<f64> {
    let e = grandfather_morphism();
    let bell = DensityMatrix::bell();
    let out = Model::Pctc
        .close_loop(e.phi(), e.cv_dims(), &bell)?
        .ok_or_else(|| CtcError::InvalidState("grandfather on a Bell pair cannot be post-selected".into()))?;
    trace_distance(&out.partial_trace(&[1])?, &bell.partial_trace(&[1])?)
}

/// The grandfather interaction on the second half of a bipartite system.
pub fn entanglement_breaking_morphism() -> ElementaryMorphism {
    let g = grandfather_morphism();
    let phi = QChannel::identity(vec![2]).tensor(g.phi());
    ElementaryMorphism::new(phi, vec![2]).expect("CPTP").with_label("entanglement-breaking")
}

pub fn entanglement_breaking() -> Result<Scenario> {
    let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
    let product = DensityMatrix::qubit_plus().tensor(&DensityMatrix::qubit_one());
    let product_out = DensityMatrix::qubit_plus().tensor(&DensityMatrix::maximally_mixed(vec![2]));
    loop_scenario(
        "entanglement_breaking",
        "the grandfather loop on one half of a Bell pair leaves a product of maximally mixed states",
        Model::Dctc,
        entanglement_breaking_morphism(),
        vec![
            ScenarioCase::new("bell", DensityMatrix::bell(), Some(Expected::State(mixed))),
            ScenarioCase::new("|+>|1>", product, Some(Expected::State(product_out))),
        ],
    )
}

/// `|a, c⟩ ↦ |a ⊕ c, a⟩`: the grandfather circuit with the roles of control
/// and target exchanged.
pub fn nonlinearity_unitary() -> ComplexMatrix {
    qubit_basis_map(2, |b| vec![b[0] ^ b[1], b[0]])
}

pub fn nonlinearity_morphism() -> ElementaryMorphism {
    let phi = QChannel::from_unitary(nonlinearity_unitary(), vec![2, 2]).expect("unitary");
    ElementaryMorphism::new(phi, vec![2]).expect("CPTP").with_label("nonlinearity")
}

/// `(1 − ε/2)|0⟩⟨0| + (ε/2)|1⟩⟨1|`.
pub fn nonlinearity_input(eps: f64) -> Result<DensityMatrix> {
    DensityMatrix::diagonal(vec![2], &[1.0 - eps / 2.0, eps / 2.0])
}

/// `(1 − ε + ε²/2)|0⟩⟨0| + ε(1 − ε/2)|1⟩⟨1|`.
pub fn nonlinearity_expected(eps: f64) -> Result<DensityMatrix> {
    let p1 = eps * (1.0 - eps / 2.0);
    DensityMatrix::diagonal(vec![2], &[1.0 - p1, p1])
}

pub fn nonlinearity(eps: f64) -> Result<Scenario> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(CtcError::InvalidState(format!("mixing parameter {eps} outside [0, 1]")));
    }
    let zero = DensityMatrix::qubit_zero();
    loop_scenario(
        "nonlinearity",
        "both basis states map to |0> while their mixture does not",
        Model::Dctc,
        nonlinearity_morphism(),
        vec![
            ScenarioCase::new("|0>", zero.clone(), Some(Expected::State(zero.clone()))),
            ScenarioCase::new("|1>", DensityMatrix::qubit_one(), Some(Expected::State(zero))),
            ScenarioCase::new(
                format!("mixture eps={eps}"),
                nonlinearity_input(eps)?,
                Some(Expected::State(nonlinearity_expected(eps)?)),
            ),
        ],
    )
}

/// Controlled swap of the second CR qubit with the CV qubit, controlled by
/// the first CR qubit, followed by dephasing of the CV qubit.
pub fn discontinuity_morphism() -> ElementaryMorphism {
    let u = gates::make_gate(&GateSpec::Cswap).expect("valid");
    let phi = u.then(&QChannel::identity(vec![2, 2]).tensor(&dephase(2))).expect("types agree");
    ElementaryMorphism::new(phi, vec![2]).expect("CPTP").with_label("discontinuity")
}

/// `((1 − ε)|0⟩⟨0| + ε|1⟩⟨1|) ⊗ ρ`.
pub fn discontinuity_input(eps: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::diagonal(vec![2], &[1.0 - eps, eps])?.tensor(rho))
}

/// The loop state selected for [`discontinuity_input`].
pub fn discontinuity_fixed_point(eps: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = dctc_apply_full(&discontinuity_morphism(), &discontinuity_input(eps, rho)?, &SolverOptions::default())?;
    Ok(out.tau)
}

pub fn discontinuity(eps: f64, rho: &DensityMatrix) -> Result<Scenario> {
    if !(0.0..=1.0).contains(&eps) || rho.dims() != [2] {
        return Err(CtcError::InvalidState("discontinuity takes eps in [0, 1] and a qubit state".into()));
    }
    loop_scenario(
        "discontinuity",
        "the selected loop state jumps when the control weight reaches zero",
        Model::Dctc,
        discontinuity_morphism(),
        vec![ScenarioCase::new(format!("eps={eps}"), discontinuity_input(eps, rho)?, None)],
    )
}

/// The four controlled unitaries, indexed by the two-bit control value.
pub fn discrimination_unitaries() -> [ComplexMatrix; 4] {
    let x = gates::pauli_x();
    let h = gates::hadamard();
    let i2 = linalg::identity(2);
    let swap = qubit_basis_map(2, |b| vec![b[1], b[0]]);
    [swap.clone(), linalg::kron(&x, &x), linalg::kron(&x, &i2) * linalg::kron(&h, &i2), linalg::kron(&x, &h) * swap]
}

/// CR `(ψ, ancilla)` and CV pair: swap the CR pair into the loop, apply
/// `U_ij` to the loop pair controlled by the pair that came out, then read
/// the CR pair in the computational basis.
pub fn discrimination_morphism() -> ElementaryMorphism {
    let swap_pairs = qubit_basis_map(4, |b| vec![b[2], b[3], b[0], b[1]]);
    let u = controlled_sum(&discrimination_unitaries()) * swap_pairs;
    let readout = dephase(2).tensor(&dephase(2)).tensor(&QChannel::identity(vec![2, 2]));
    let phi = QChannel::from_unitary(u, vec![2; 4]).expect("unitary").then(&readout).expect("types agree");
    ElementaryMorphism::new(phi, vec![2, 2]).expect("CPTP").with_label("discrimination")
}

pub const DISCRIMINATION_LABELS: [&str; 4] = ["|0>", "|1>", "|+>", "|->"];

fn discrimination_state(which: usize) -> Result<DensityMatrix> {
    match which {
        0 => Ok(DensityMatrix::qubit_zero()),
        1 => Ok(DensityMatrix::qubit_one()),
        2 => Ok(DensityMatrix::qubit_plus()),
        3 => Ok(DensityMatrix::qubit_minus()),
        _ => Err(CtcError::IndexOutOfRange { index: which, count: 4 }),
    }
}

/// `which` indexes `|0⟩, |1⟩, |+⟩, |−⟩`; the expected readout is the
/// two-bit string with the same index.
pub fn discrimination(which: usize) -> Result<Scenario> {
    let psi = discrimination_state(which)?;
    let input = psi.tensor(&DensityMatrix::qubit_zero());
    let expected = DensityMatrix::basis(vec![2, 2], which)?;
    loop_scenario(
        "discrimination",
        "four non-orthogonal inputs are read out as four distinct bit strings",
        Model::Dctc,
        discrimination_morphism(),
        vec![ScenarioCase::new(DISCRIMINATION_LABELS[which], input, Some(Expected::State(expected)))],
    )
}

/// Readout distribution over `00, 01, 10, 11` for one input state.
pub fn discrimination_distribution(psi: &DensityMatrix) -> Result<Vec<f64>> {
    let e = discrimination_morphism();
    let out = dctc_apply_full(&e, &psi.tensor(&DensityMatrix::qubit_zero()), &SolverOptions::default())?;
    Ok(out.output.diagonal_probabilities())
}

/// Alice's measurement controlled by a basis bit: `(i, A) ↦ (i, A)`, reading
/// `A` in the computational basis for `i = 0` and after a Hadamard for `i = 1`.
pub fn alice_measurement() -> QChannel {
    let h = gates::hadamard();
    let mut kraus = Vec::new();
    for i in 0..2 {
        for k in 0..2 {
            let m = if i == 0 { linalg::unit(2, k, k) } else { linalg::unit(2, k, k) * &h };
            kraus.push(linalg::kron(&linalg::unit(2, i, i), &m));
        }
    }
    QChannel::new_cptp(kraus, vec![2, 2], vec![2, 2]).expect("CPTP")
}

/// Alice's controlled measurement on her half of a Bell pair and Bob's
/// discrimination loop on the other half, with wires `(i, A, B1, B2)`.
pub fn linearity_trap() -> Result<Scenario> {
    let names = ["in_i", "in_a", "in_b1", "in_b2", "alice", "bob", "out_i", "out_a", "out_b1", "out_b2"];
    let edges = vec![(0, 4), (1, 4), (2, 5), (3, 5), (4, 6), (4, 7), (5, 8), (5, 9), (5, 5)];
    let graph = FramedCausalGraph::new(
        names.iter().map(|s| s.to_string()).collect(),
        edges,
        vec![0, 1, 2, 3],
        vec![6, 7, 8, 9],
    )?;
    let mut alpha = vec![vec![2]; 8];
    alpha.push(vec![2, 2]);
    let mut beta = vec![None; 10];
    beta[4] = Some(alice_measurement());
    beta[5] = Some(discrimination_morphism().phi().clone());
    let diagram = Diagram::new(graph, alpha, beta)?;
    let cases = (0..2)
        .map(|i| {
            let input = DensityMatrix::basis(vec![2], i)
                .expect("valid")
                .tensor(&DensityMatrix::bell())
                .tensor(&DensityMatrix::qubit_zero());
            ScenarioCase::new(format!("basis bit {i}"), input, None)
        })
        .collect();
    Ok(Scenario {
        name: "linearity_trap".into(),
        description: "Bob's readout does not depend on the basis Alice measures in".into(),
        model: Model::Dctc,
        diagram,
        morphism: None,
        cases,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityTrapReport {
    /// Bob's distribution from the full evaluation, per basis bit.
    pub correct: [Vec<f64>; 2],
    /// Bob's distribution from evaluating each of Alice's outcomes
    /// separately and averaging, per basis bit.
    pub branch_sum: [Vec<f64>; 2],
    /// Bob's distribution with Alice absent.
    pub bob_alone: Vec<f64>,
    /// Total variation distance between the two correct distributions.
    pub signalling: f64,
    /// Largest total variation distance between correct and branch-sum.
    pub branch_gap: f64,
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn linearity_trap_report() -> Result<LinearityTrapReport> {
    let s = linearity_trap()?;
    let m = eval_diagram(&s.diagram, Model::Dctc)?;
    let mut correct: [Vec<f64>; 2] = Default::default();
    for (i, case) in s.cases.iter().enumerate() {
        let out = m.apply(&case.input)?.into_state().expect("fixed points always exist");
        correct[i] = out.partial_trace(&[2, 3])?.diagonal_probabilities();
    }
    let branches = [
        [DensityMatrix::qubit_zero(), DensityMatrix::qubit_one()],
        [DensityMatrix::qubit_plus(), DensityMatrix::qubit_minus()],
    ];
    let mut branch_sum: [Vec<f64>; 2] = Default::default();
    for (i, pair) in branches.iter().enumerate() {
        let a = discrimination_distribution(&pair[0])?;
        let b = discrimination_distribution(&pair[1])?;
        branch_sum[i] = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    }
    let bob_alone = discrimination_distribution(&DensityMatrix::maximally_mixed(vec![2]))?;
    let signalling = total_variation(&correct[0], &correct[1]);
    let branch_gap = (0..2).map(|i| total_variation(&correct[i], &branch_sum[i])).fold(0.0, f64::max);
    Ok(LinearityTrapReport { correct, branch_sum, bob_alone, signalling, branch_gap })
}

/// Input `R`, loop `C_1 … C_N`: the loop receives `(R, C_1, …, C_{N−1})`,
/// `C_N` leaves as the CR output. The selected loop state is `ρ^{⊗N}`.
pub fn cloner_loop_morphism(n: usize) -> Result<ElementaryMorphism> {
    if n == 0 {
        return Err(CtcError::InvalidState("a cloning loop needs at least one register".into()));
    }
    let mut perm = vec![n];
    perm.extend(0..n);
    let phi = QChannel::permutation(&vec![2; n + 1], &perm)?;
    Ok(ElementaryMorphism::new(phi, vec![2; n])?.with_label("cloning loop"))
}

/// The cloning loop with a CNOT copy of each loop register into a fresh CR
/// ancilla; the last register is discarded instead of leaving.
pub fn cloner_cnot_morphism(n: usize) -> Result<ElementaryMorphism> {
    if n == 0 {
        return Err(CtcError::InvalidState("a cloning loop needs at least one register".into()));
    }
    let zeros = DensityMatrix::basis(vec![2; n], 0)?;
    let prepare = QChannel::identity(vec![2; n + 1]).tensor(&QChannel::prepare(&zeros));
    let copies = qubit_basis_map(2 * n + 1, |b| {
        let mut out = b.to_vec();
        for k in 1..=n {
            out[n + k] ^= b[k];
        }
        out
    });
    let copies = QChannel::from_unitary(copies, vec![2; 2 * n + 1])?;
    let keep: Vec<usize> = (0..2 * n + 1).filter(|&q| q != n).collect();
    let drop_last = QChannel::partial_trace(vec![2; 2 * n + 1], &keep)?;
    let mut perm: Vec<usize> = (n..2 * n).collect();
    perm.extend(0..n);
    let reorder = QChannel::permutation(&vec![2; 2 * n], &perm)?;
    let phi = prepare.then(&copies)?.then(&drop_last)?.then(&reorder)?;
    Ok(ElementaryMorphism::new(phi, vec![2; n])?.with_label("cloning by CNOT extraction"))
}

fn power(rho: &DensityMatrix, n: usize) -> DensityMatrix {
    (1..n).fold(rho.clone(), |acc, _| acc.tensor(rho))
}

pub fn cloner_cnot(n: usize, rho: &DensityMatrix) -> Result<Scenario> {
    if rho.dims() != [2] {
        return Err(CtcError::InvalidState("the cloner takes a qubit state".into()));
    }
    let deph = dephase(2).apply(rho)?;
    loop_scenario(
        "cloner_cnot",
        "CNOT extraction from a cloning loop yields copies of the dephased input",
        Model::Dctc,
        cloner_cnot_morphism(n)?,
        vec![ScenarioCase::new(format!("N={n}"), rho.clone(), Some(Expected::State(power(&deph, n))))],
    )
}

/// Outcome probabilities of the qubit SIC measurement.
pub fn sic_probabilities(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let out = gates::make_gate(&GateSpec::SicPovmQubit)?.apply(rho)?;
    let p = out.diagonal_probabilities();
    Ok([p[0], p[1], p[2], p[3]])
}

/// Joint SIC outcome distribution of the `N` registers in the selected state
/// of the cloning loop, over `4^N` strings with the first register most
/// significant.
pub fn cloner_sic_distribution(n: usize, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if n > CLONER_ENGINE_MAX {
        return Err(CtcError::InvalidState(format!("exact SIC cloning is limited to N <= {CLONER_ENGINE_MAX}")));
    }
    let e = cloner_loop_morphism(n)?;
    let tau = dctc_apply_full(&e, rho, &SolverOptions::default())?.tau;
    let sic = gates::make_gate(&GateSpec::SicPovmQubit)?;
    let all = (1..n).fold(sic.clone(), |acc, _| acc.tensor(&sic));
    Ok(all.apply(&tau)?.diagonal_probabilities())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRun {
    pub n: usize,
    pub counts: [usize; 4],
    pub estimate: DensityMatrix,
    pub fidelity: f64,
}

/// Linear-inversion estimate from SIC counts, projected onto the Bloch ball.
pub fn sic_estimate(counts: &[usize; 4]) -> DensityMatrix {
    let total: usize = counts.iter().sum();
    let mut r = [0.0; 3];
    for (x, n) in gates::sic_bloch_vectors().iter().enumerate() {
        let f = counts[x] as f64 / total.max(1) as f64;
        for k in 0..3 {
            r[k] += 3.0 * f * n[k];
        }
    }
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        r.iter_mut().for_each(|v| *v /= norm);
    }
    let id = linalg::identity(2);
    let m = (id + gates::pauli_x() * c(r[0], 0.0) + gates::pauli_y() * c(r[1], 0.0) + gates::pauli_z() * c(r[2], 0.0))
        * c(0.5, 0.0);
    DensityMatrix::from_computed(vec![2], m).expect("Bloch ball")
}

/// Samples the `N` SIC outcomes of the cloning loop's registers and
/// reconstructs the input. Loops up to [`CLONER_ENGINE_MAX`] are sampled from
/// the exact joint distribution; longer loops from the product of the
/// single-register distribution, which the exact runs reproduce.
pub fn cloner_sic(n: usize, rho: &DensityMatrix, seed: u64) -> Result<TomographyRun> {
    if rho.dims() != [2] || n == 0 {
        return Err(CtcError::InvalidState("the cloner takes a qubit state and N >= 1".into()));
    }
    let mut rng = random::rng(seed);
    let mut counts = [0usize; 4];
    if n <= CLONER_ENGINE_MAX {
        let joint = cloner_sic_distribution(n, rho)?;
        let s = sample(&mut rng, &joint);
        for k in 0..n {
            counts[(s >> (2 * (n - 1 - k))) & 3] += 1;
        }
    } else {
        let p = sic_probabilities(rho)?;
        for _ in 0..n {
            counts[sample(&mut rng, &p)] += 1;
        }
    }
    let estimate = sic_estimate(&counts);
    let fidelity = fidelity(rho, &estimate)?;
    Ok(TomographyRun { n, counts, estimate, fidelity })
}

fn sample<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &q) in p.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 10] = [
    "grandfather",
    "grandfather_pctc",
    "entanglement_breaking",
    "nonlinearity",
    "discontinuity",
    "discrimination",
    "linearity_trap",
    "cloner_loop",
    "cloner_cnot",
    "acyclic",
];

/// A built-in scenario with default parameters.
pub fn builtin(name: &str) -> Result<Scenario> {
    match name {
        "grandfather" => grandfather(),
        "grandfather_pctc" => grandfather_pctc(),
        "entanglement_breaking" => entanglement_breaking(),
        "nonlinearity" => nonlinearity(0.5),
        "discontinuity" => discontinuity(0.1, &DensityMatrix::qubit_plus()),
        "discrimination" => {
            let mut s = discrimination(0)?;
            for which in 1..4 {
                s.cases.extend(discrimination(which)?.cases);
            }
            Ok(s)
        }
        "linearity_trap" => linearity_trap(),
        "cloner_loop" => {
            let rho = DensityMatrix::qubit_plus();
            loop_scenario(
                "cloner_loop",
                "the loop holds copies of the input that never leave it",
                Model::Dctc,
                cloner_loop_morphism(3)?,
                vec![ScenarioCase::new("N=3", rho.clone(), Some(Expected::State(rho)))],
            )
        }
        "cloner_cnot" => cloner_cnot(3, &DensityMatrix::qubit_plus()),
        "acyclic" => acyclic(),
        other => Err(CtcError::InvalidDiagram(format!("unknown scenario `{other}`"))),
    }
}

/// A Hadamard followed by a CNOT, with no loop.
pub fn acyclic() -> Result<Scenario> {
    let names = ["in0", "in1", "h", "cnot", "out0", "out1"].iter().map(|s| s.to_string()).collect();
    let edges = vec![(0, 2), (2, 3), (1, 3), (3, 4), (3, 5)];
    let graph = FramedCausalGraph::new(names, edges, vec![0, 1], vec![4, 5])?;
    let beta = vec![
        None,
        None,
        Some(gates::make_gate(&GateSpec::Hadamard)?),
        Some(gates::make_gate(&GateSpec::Cnot)?),
        None,
        None,
    ];
    let diagram = Diagram::new(graph, vec![vec![2]; 5], beta)?;
    let zero = DensityMatrix::basis(vec![2, 2], 0)?;
    Ok(Scenario {
        name: "acyclic".into(),
        description: "a Bell pair prepared without any loop".into(),
        model: Model::Dctc,
        diagram,
        morphism: None,
        cases: vec![ScenarioCase::new("|00>", zero, Some(Expected::State(DensityMatrix::bell())))],
    })
}

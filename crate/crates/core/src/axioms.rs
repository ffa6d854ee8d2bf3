//! Randomized checks of the loop axioms for either semantics.

use rand::Rng;
use serde::Serialize;

use crate::channel::QChannel;
use crate::error::Result;
use crate::model::Model;
use crate::random::{self, random_channel};
use crate::scenarios;
use crate::state::{trace_distance, DensityMatrix};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axiom {
    Naturality,
    Strength,
    Sliding,
    Vanishing,
    Yanking,
    Terminality,
}

impl Axiom {
    pub const ALL: [Axiom; 6] =
        [Self::Naturality, Self::Strength, Self::Sliding, Self::Vanishing, Self::Yanking, Self::Terminality];

    pub fn name(self) -> &'static str {
        match self {
            Self::Naturality => "naturality",
            Self::Strength => "strength",
            Self::Sliding => "sliding",
            Self::Vanishing => "vanishing",
            Self::Yanking => "yanking",
            Self::Terminality => "terminality",
        }
    }

    /// Yanking holds only with post-selection and terminality only with
    /// fixed points; the other four hold for both.
    pub fn expected(self, model: Model) -> Verdict {
        match (self, model) {
            (Self::Yanking, Model::Dctc) | (Self::Terminality, Model::Pctc) => Verdict::Fail,
            _ => Verdict::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub model: Model,
    pub trials: usize,
    pub tolerance: f64,
    pub max_deviation: f64,
    /// `(trial seed, deviation)` for every trial above tolerance, by seed.
    pub failures: Vec<(u64, f64)>,
    /// Trials where the post-selected process could not happen.
    pub skipped: usize,
    pub verdict: Verdict,
    pub expected: Verdict,
    /// Deviation on the qubit maximally entangled probe (yanking only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell_deviation: Option<f64>,
    /// Deviation on probes without an ancilla (yanking only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_deviation: Option<f64>,
    /// Deviation of a fixed witness process (terminality only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_deviation: Option<f64>,
}

impl AxiomReport {
    pub fn as_expected(&self) -> bool {
        self.verdict == self.expected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomConfig {
    pub trials: usize,
    /// Trial `t` uses dimension `dims[t % dims.len()]` for every system.
    pub dims: Vec<usize>,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        Self { trials: 50, dims: vec![2, 3], seed: 0, tolerance: DEFAULT_TOLERANCE }
    }
}

struct Tally {
    axiom: Axiom,
    model: Model,
    tolerance: f64,
    trials: usize,
    max_deviation: f64,
    failures: Vec<(u64, f64)>,
    skipped: usize,
}

impl Tally {
    fn new(axiom: Axiom, model: Model, cfg: &AxiomConfig) -> Self {
        Self { axiom, model, tolerance: cfg.tolerance, trials: 0, max_deviation: 0.0, failures: vec![], skipped: 0 }
    }

    fn record(&mut self, seed: u64, dev: Option<f64>) {
        self.trials += 1;
        match dev {
            None => self.skipped += 1,
            Some(d) => {
                self.max_deviation = self.max_deviation.max(d);
                if d > self.tolerance {
                    self.failures.push((seed, d));
                }
            }
        }
    }

    fn finish(mut self) -> AxiomReport {
        self.failures.sort_by_key(|f| f.0);
        let verdict = if self.max_deviation <= self.tolerance { Verdict::Pass } else { Verdict::Fail };
        AxiomReport {
            axiom: self.axiom,
            model: self.model,
            trials: self.trials,
            tolerance: self.tolerance,
            max_deviation: self.max_deviation,
            failures: self.failures,
            skipped: self.skipped,
            verdict,
            expected: self.axiom.expected(self.model),
            bell_deviation: None,
            product_deviation: None,
            witness_deviation: None,
        }
    }
}

/// Probes on `dims` with an ancilla of the same total dimension: the
/// maximally entangled state and one random pure state.
fn probes(dims: &[usize], seed: u64) -> Vec<DensityMatrix> {
    let d: usize = dims.iter().product();
    let mut full = dims.to_vec();
    full.push(d);
    let me = DensityMatrix::new(full.clone(), DensityMatrix::maximally_entangled(d).into_matrix()).expect("valid");
    let mut rng = random::rng(seed);
    vec![me, random::random_pure_state(&mut rng, full)]
}

/// Largest trace distance between two evaluations over the probes; `None`
/// if either side cannot happen on some probe.
fn compare(
    probes: &[DensityMatrix],
    lhs: impl Fn(&DensityMatrix) -> Result<Option<DensityMatrix>>,
    rhs: impl Fn(&DensityMatrix) -> Result<Option<DensityMatrix>>,
) -> Result<Option<f64>> {
    let mut worst = 0.0f64;
    for p in probes {
        match (lhs(p)?, rhs(p)?) {
            (Some(a), Some(b)) => worst = worst.max(trace_distance(&a, &b)?),
            _ => return Ok(None),
        }
    }
    Ok(Some(worst))
}

fn trial_seeds(cfg: &AxiomConfig) -> impl Iterator<Item = (u64, usize)> + '_ {
    (0..cfg.trials).map(move |t| (random::split_seed(cfg.seed, t as u64), cfg.dims[t % cfg.dims.len()]))
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    random::split_seed(seed, k)
}

/// `Ξ((b ⊗ id)∘Φ∘(a ⊗ id))` against `b ∘ Ξ(Φ) ∘ a`.
pub fn check_naturality(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Naturality, model, cfg);
    for (seed, d) in trial_seeds(cfg) {
        let phi = random_channel(vec![d, d], vec![d, d], sub_seed(seed, 0));
        let a = random_channel(vec![d], vec![d], sub_seed(seed, 1));
        let b = random_channel(vec![d], vec![d], sub_seed(seed, 2));
        let idc = QChannel::identity(vec![d]);
        let inner = a.tensor(&idc).then(&phi)?.then(&b.tensor(&idc))?;
        let dev = compare(
            &probes(&[d], sub_seed(seed, 3)),
            |p| model.close_loop(&inner, &[d], p),
            |p| {
                let x = a.apply_prefix(p)?;
                match model.close_loop(&phi, &[d], &x)? {
                    Some(y) => Ok(Some(b.apply_prefix(&y)?)),
                    None => Ok(None),
                }
            },
        )?;
        tally.record(seed, dev);
    }
    Ok(tally.finish())
}

/// `Ξ(Ψ ⊗ Φ)` against `Ψ ⊗ Ξ(Φ)`.
pub fn check_strength(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Strength, model, cfg);
    for (seed, d) in trial_seeds(cfg) {
        let phi = random_channel(vec![d, d], vec![d, d], sub_seed(seed, 0));
        let psi = random_channel(vec![2], vec![2], sub_seed(seed, 1));
        let joint = psi.tensor(&phi);
        let dev = compare(
            &probes(&[2, d], sub_seed(seed, 2)),
            |p| model.close_loop(&joint, &[d], p),
            |p| {
                let x = psi.apply_prefix(p)?.permute(&[1, 0, 2])?;
                match model.close_loop(&phi, &[d], &x)? {
                    Some(y) => Ok(Some(y.permute(&[1, 0, 2])?)),
                    None => Ok(None),
                }
            },
        )?;
        tally.record(seed, dev);
    }
    Ok(tally.finish())
}

/// `Ξ((id ⊗ g)∘Φ)` against `Ξ(Φ∘(id ⊗ g))` for `g: C → C'` and
/// `Φ: H ⊗ C' → K ⊗ C`, with `C` and `C'` of different dimensions.
pub fn check_sliding(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Sliding, model, cfg);
    for (seed, d) in trial_seeds(cfg) {
        let (c, c2) = if d == 2 { (3, 2) } else { (2, d) };
        let phi = random_channel(vec![d, c2], vec![d, c], sub_seed(seed, 0));
        let g = random_channel(vec![c], vec![c2], sub_seed(seed, 1));
        let left = phi.then(&QChannel::identity(vec![d]).tensor(&g))?;
        let right = QChannel::identity(vec![d]).tensor(&g).then(&phi)?;
        let dev = compare(
            &probes(&[d], sub_seed(seed, 2)),
            |p| model.close_loop(&left, &[c2], p),
            |p| model.close_loop(&right, &[c], p),
        )?;
        tally.record(seed, dev);
    }
    Ok(tally.finish())
}

/// A loop over the trivial system against the plain channel.
pub fn check_vanishing(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Vanishing, model, cfg);
    for (seed, d) in trial_seeds(cfg) {
        let phi = random_channel(vec![d], vec![d], sub_seed(seed, 0));
        let dev = compare(
            &probes(&[d], sub_seed(seed, 1)),
            |p| model.close_loop(&phi, &[], p),
            |p| Ok(Some(phi.apply_prefix(p)?)),
        )?;
        tally.record(seed, dev);
    }
    Ok(tally.finish())
}

/// The loop closed over a swap against the identity.
pub fn check_yanking(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Yanking, model, cfg);
    let mut product = 0.0f64;
    for (seed, d) in trial_seeds(cfg) {
        let swap = QChannel::permutation(&[d, d], &[1, 0])?;
        let dev =
            compare(&probes(&[d], sub_seed(seed, 0)), |p| model.close_loop(&swap, &[d], p), |p| Ok(Some(p.clone())))?;
        tally.record(seed, dev);
        let mut rng = random::rng(sub_seed(seed, 1));
        let single =
            [DensityMatrix::basis(vec![d], rng.random_range(0..d))?, random::random_density(&mut rng, vec![d])];
        if let Some(p) = compare(&single, |p| model.close_loop(&swap, &[d], p), |p| Ok(Some(p.clone())))? {
            product = product.max(p);
        }
    }
    let swap = QChannel::permutation(&[2, 2], &[1, 0])?;
    let bell = compare(&[DensityMatrix::bell()], |p| model.close_loop(&swap, &[2], p), |p| Ok(Some(p.clone())))?;
    let mut report = tally.finish();
    report.bell_deviation = bell;
    report.product_deviation = Some(product);
    Ok(report)
}

/// Ancilla marginal after closing the loop against the ancilla marginal of
/// the input. With post-selection the grandfather process is recorded as a
/// witness.
pub fn check_terminality(model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    let mut tally = Tally::new(Axiom::Terminality, model, cfg);
    for (seed, d) in trial_seeds(cfg) {
        let phi = random_channel(vec![d, d], vec![d, d], sub_seed(seed, 0));
        let dev = compare(
            &probes(&[d], sub_seed(seed, 1)),
            |p| Ok(model.close_loop(&phi, &[d], p)?.map(|y| y.partial_trace(&[1]).expect("two subsystems"))),
            |p| Ok(Some(p.partial_trace(&[1])?)),
        )?;
        tally.record(seed, dev);
    }
    let mut report = tally.finish();
    if model == Model::Pctc {
        report.witness_deviation = Some(scenarios::grandfather_terminality_witness()?);
    }
    Ok(report)
}

pub fn check_axiom(axiom: Axiom, model: Model, cfg: &AxiomConfig) -> Result<AxiomReport> {
    match axiom {
        Axiom::Naturality => check_naturality(model, cfg),
        Axiom::Strength => check_strength(model, cfg),
        Axiom::Sliding => check_sliding(model, cfg),
        Axiom::Vanishing => check_vanishing(model, cfg),
        Axiom::Yanking => check_yanking(model, cfg),
        Axiom::Terminality => check_terminality(model, cfg),
    }
}

/// All six checks in a fixed order.
pub fn run_axiom_suite(model: Model, cfg: &AxiomConfig) -> Result<Vec<AxiomReport>> {
    Axiom::ALL.iter().map(|&a| check_axiom(a, model, cfg)).collect()
}

//! Processes with one fixed-point loop per step, and their sequences.

use crate::channel::{self, QChannel};
use crate::error::{CtcError, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::random;
use crate::state::{self, DensityMatrix};

use super::solver::{solve_max_entropy, SolverDiagnostics, SolverOptions};

/// A channel `H ⊗ C → K ⊗ C` whose trailing `C` is fed back to itself.
#[derive(Debug, Clone)]
pub struct ElementaryMorphism {
    phi: QChannel,
    h_dims: Vec<usize>,
    k_dims: Vec<usize>,
    cv_dims: Vec<usize>,
    label: Option<String>,
}

impl ElementaryMorphism {
    /// `cv_dims` must be a suffix of both the input and output dims of `phi`.
    pub fn new(phi: QChannel, cv_dims: Vec<usize>) -> Result<Self> {
        if !phi.is_cptp(1e-9) {
            return Err(CtcError::InvalidChannel(format!(
                "elementary morphism must be trace preserving (defect {:e})",
                phi.tp_defect()
            )));
        }
        let split = |dims: &[usize], side: &str| -> Result<Vec<usize>> {
            if dims.len() < cv_dims.len() || dims[dims.len() - cv_dims.len()..] != cv_dims[..] {
                return Err(CtcError::DimensionMismatch(format!(
                    "loop dims {cv_dims:?} are not a suffix of the {side} dims {dims:?}"
                )));
            }
            Ok(dims[..dims.len() - cv_dims.len()].to_vec())
        };
        let h_dims = split(phi.in_dims(), "input")?;
        let k_dims = split(phi.out_dims(), "output")?;
        Ok(Self { phi, h_dims, k_dims, cv_dims, label: None })
    }

    /// Identity on `dims` with a trivial loop.
    pub fn identity(dims: Vec<usize>) -> Self {
        Self { phi: QChannel::identity(dims.clone()), h_dims: dims.clone(), k_dims: dims, cv_dims: vec![], label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn phi(&self) -> &QChannel {
        &self.phi
    }

    pub fn h_dims(&self) -> &[usize] {
        &self.h_dims
    }

    pub fn k_dims(&self) -> &[usize] {
        &self.k_dims
    }

    pub fn cv_dims(&self) -> &[usize] {
        &self.cv_dims
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    fn check_input(&self, rho: &DensityMatrix) -> Result<Vec<usize>> {
        let n = self.h_dims.len();
        if rho.dims().len() < n || rho.dims()[..n] != self.h_dims[..] {
            return Err(CtcError::DimensionMismatch(format!(
                "state dims {:?} do not start with the morphism input {:?}",
                rho.dims(),
                self.h_dims
            )));
        }
        Ok(rho.dims()[n..].to_vec())
    }

    /// Permutation taking `(H, E, C)` to `(H, C, E)` on flattened subsystems.
    fn hec_to_hce(&self, e_len: usize) -> Vec<usize> {
        let h = self.h_dims.len();
        let cv = self.cv_dims.len();
        let mut perm: Vec<usize> = (0..h).collect();
        perm.extend(h + e_len..h + e_len + cv);
        perm.extend(h..h + e_len);
        perm
    }
}

/// The channel `σ ↦ Tr_{K,E}[(Φ ⊗ id_E)(ρ ⊗ σ)]` on the loop system.
pub fn induced_cv_channel(e: &ElementaryMorphism, rho: &DensityMatrix) -> Result<QChannel> {
    let e_dims = e.check_input(rho)?;
    let dc = linalg::product(&e.cv_dims);
    let de = linalg::product(&e_dims);
    let dk = linalg::product(&e.k_dims);
    let mut dims = rho.dims().to_vec();
    dims.extend_from_slice(&e.cv_dims);
    let perm = linalg::permutation_matrix(&dims, &e.hec_to_hce(e_dims.len()))?;
    let ide = linalg::identity(de);
    let (vals, vecs) = linalg::eigh(rho.matrix());
    let mut kraus = Vec::new();
    for (a, &p) in vals.iter().enumerate() {
        if p <= 1e-14 {
            continue;
        }
        let psi = ComplexMatrix::from_column_slice(rho.dim(), 1, vecs.column(a).as_slice()).scale(p.sqrt());
        let embed = &perm * linalg::kron(&psi, &linalg::identity(dc));
        for k in e.phi.kraus() {
            let w = linalg::kron(k, &ide) * &embed;
            for ko in 0..dk {
                for eo in 0..de {
                    let m = ComplexMatrix::from_fn(dc, dc, |r, col| w[((ko * dc + r) * de + eo, col)]);
                    if linalg::max_abs(&m) > 0.0 {
                        kraus.push(m);
                    }
                }
            }
        }
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(dc, dc));
    }
    let ch = QChannel::new(kraus, e.cv_dims.clone(), e.cv_dims.clone())?;
    let ch = if ch.kraus().len() > dc * dc { ch.compress()? } else { ch };
    if !ch.is_cptp(1e-9) {
        return Err(CtcError::InvalidChannel(format!("induced loop channel defect {:e}", ch.tp_defect())));
    }
    Ok(ch)
}

/// Output of one loop step together with the loop state that was used.
#[derive(Debug, Clone)]
pub struct DctcOutcome {
    pub output: DensityMatrix,
    pub tau: DensityMatrix,
    pub diagnostics: Option<SolverDiagnostics>,
}

/// Applies `e` to `ρ` on `H ⊗ E`, closing the loop at the maximal-entropy
/// fixed point. The result lives on `K ⊗ E`.
pub fn dctc_apply_full(e: &ElementaryMorphism, rho: &DensityMatrix, opts: &SolverOptions) -> Result<DctcOutcome> {
    let e_dims = e.check_input(rho)?;
    let (tau, diagnostics) = if e.cv_dims.is_empty() {
        (DensityMatrix::unit(), None)
    } else {
        let t = induced_cv_channel(e, rho)?;
        let sol = solve_max_entropy(&t, opts)?;
        (sol.state, Some(sol.diagnostics))
    };
    let joint = rho.tensor(&tau).permute(&e.hec_to_hce(e_dims.len()))?;
    let out = e.phi.apply_prefix(&joint)?;
    let k = e.k_dims.len();
    let cv = e.cv_dims.len();
    let keep: Vec<usize> = (0..k).chain(k + cv..k + cv + e_dims.len()).collect();
    let output = out.partial_trace(&keep)?;
    Ok(DctcOutcome { output, tau, diagnostics })
}

pub fn dctc_apply(e: &ElementaryMorphism, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(dctc_apply_full(e, rho, &SolverOptions::default())?.output)
}

/// A finite sequence of elementary morphisms, applied first to last.
#[derive(Debug, Clone)]
pub struct DMixMorphism {
    steps: Vec<ElementaryMorphism>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl DMixMorphism {
    pub fn identity(dims: Vec<usize>) -> Self {
        Self { steps: vec![], in_dims: dims.clone(), out_dims: dims }
    }

    pub fn from_steps(steps: Vec<ElementaryMorphism>) -> Result<Self> {
        let Some(first) = steps.first() else {
            return Err(CtcError::InvalidDiagram("empty step list; use DMixMorphism::identity".into()));
        };
        for w in steps.windows(2) {
            if w[0].k_dims != w[1].h_dims {
                return Err(CtcError::DimensionMismatch(format!(
                    "step output {:?} does not match next input {:?}",
                    w[0].k_dims, w[1].h_dims
                )));
            }
        }
        let in_dims = first.h_dims.clone();
        let out_dims = steps.last().expect("nonempty").k_dims.clone();
        Ok(Self { steps, in_dims, out_dims })
    }

    pub fn elementary(e: ElementaryMorphism) -> Self {
        Self { in_dims: e.h_dims.clone(), out_dims: e.k_dims.clone(), steps: vec![e] }
    }

    pub fn steps(&self) -> &[ElementaryMorphism] {
        &self.steps
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }
}

/// A loop-free channel as a one-step sequence with a trivial loop.
pub fn embed(f: &QChannel) -> Result<DMixMorphism> {
    Ok(DMixMorphism::elementary(ElementaryMorphism::new(f.clone(), vec![])?))
}

/// `g ∘ f` by concatenating step lists.
pub fn compose_dmix(g: &DMixMorphism, f: &DMixMorphism) -> Result<DMixMorphism> {
    if f.out_dims != g.in_dims {
        return Err(CtcError::DimensionMismatch(format!(
            "cannot compose: output {:?} into input {:?}",
            f.out_dims, g.in_dims
        )));
    }
    let mut steps = f.steps.clone();
    steps.extend(g.steps.iter().cloned());
    Ok(DMixMorphism { steps, in_dims: f.in_dims.clone(), out_dims: g.out_dims.clone() })
}

/// Pairs the steps of `f` and `g`, padding the shorter list with identities.
/// Each pair becomes one step whose loop is the stacked loops `C₁ ⊗ C₂`.
pub fn tensor_dmix(f: &DMixMorphism, g: &DMixMorphism) -> Result<DMixMorphism> {
    let n = f.steps.len().max(g.steps.len());
    let padded = |m: &DMixMorphism| {
        let mut s = m.steps.clone();
        s.resize_with(n, || ElementaryMorphism::identity(m.out_dims.clone()));
        s
    };
    let fs = padded(f);
    let gs = padded(g);
    let mut steps = Vec::with_capacity(n);
    for (a, b) in fs.iter().zip(&gs) {
        steps.push(tensor_elementary(a, b)?);
    }
    let mut in_dims = f.in_dims.clone();
    in_dims.extend_from_slice(&g.in_dims);
    let mut out_dims = f.out_dims.clone();
    out_dims.extend_from_slice(&g.out_dims);
    Ok(DMixMorphism { steps, in_dims, out_dims })
}

/// `(H₁, H₂, C₁, C₂) → (H₁, C₁, H₂, C₂)`, then `Φ₁ ⊗ Φ₂`, then back to
/// `(K₁, K₂, C₁, C₂)`.
pub fn tensor_elementary(a: &ElementaryMorphism, b: &ElementaryMorphism) -> Result<ElementaryMorphism> {
    let (h1, h2, c1, c2) = (a.h_dims.len(), b.h_dims.len(), a.cv_dims.len(), b.cv_dims.len());
    let (k1, k2) = (a.k_dims.len(), b.k_dims.len());
    let in_dims = [&a.h_dims[..], &b.h_dims, &a.cv_dims, &b.cv_dims].concat();
    // Input layout H1 H2 C1 C2 → H1 C1 H2 C2.
    let perm_in: Vec<usize> =
        (0..h1).chain(h1 + h2..h1 + h2 + c1).chain(h1..h1 + h2).chain(h1 + h2 + c1..h1 + h2 + c1 + c2).collect();
    // Output layout K1 C1 K2 C2 → K1 K2 C1 C2.
    let mid_dims = [&a.k_dims[..], &a.cv_dims, &b.k_dims, &b.cv_dims].concat();
    let perm_out: Vec<usize> =
        (0..k1).chain(k1 + c1..k1 + c1 + k2).chain(k1..k1 + c1).chain(k1 + c1 + k2..k1 + c1 + k2 + c2).collect();
    let phi = QChannel::permutation(&in_dims, &perm_in)?
        .then(&a.phi.tensor(&b.phi))?
        .then(&QChannel::permutation(&mid_dims, &perm_out)?)?;
    let label = match (&a.label, &b.label) {
        (Some(x), Some(y)) => Some(format!("{x}|{y}")),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    };
    let mut e = ElementaryMorphism::new(phi, [&a.cv_dims[..], &b.cv_dims].concat())?;
    e.label = label;
    Ok(e)
}

/// Evaluation trace of a sequence: the output and the loop state of each step.
#[derive(Debug, Clone)]
pub struct DmixEvaluation {
    pub output: DensityMatrix,
    pub taus: Vec<DensityMatrix>,
    pub diagnostics: Vec<Option<SolverDiagnostics>>,
}

pub fn eval_dmix_full(m: &DMixMorphism, rho: &DensityMatrix, opts: &SolverOptions) -> Result<DmixEvaluation> {
    let n = m.in_dims.len();
    if rho.dims().len() < n || rho.dims()[..n] != m.in_dims[..] {
        return Err(CtcError::DimensionMismatch(format!(
            "state dims {:?} do not start with the morphism input {:?}",
            rho.dims(),
            m.in_dims
        )));
    }
    let mut current = rho.clone();
    let mut taus = Vec::with_capacity(m.steps.len());
    let mut diagnostics = Vec::with_capacity(m.steps.len());
    for step in &m.steps {
        let out = dctc_apply_full(step, &current, opts)?;
        current = out.output;
        taus.push(out.tau);
        diagnostics.push(out.diagnostics);
    }
    Ok(DmixEvaluation { output: current, taus, diagnostics })
}

/// Sequential loop evaluation; trailing subsystems of `ρ` are an ancilla.
pub fn eval_dmix(m: &DMixMorphism, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(eval_dmix_full(m, rho, &SolverOptions::default())?.output)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub count: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { count: 20, tol: 1e-7, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub max_deviation: f64,
    /// Description of the probe with the largest deviation.
    pub worst_probe: String,
}

/// Probe states for comparing processes on `dims`: the maximally entangled
/// state with a copy of the input, every basis state, and `count` random pure
/// states with an ancilla of the input dimension.
pub fn probe_states(dims: &[usize], config: &ProbeConfig) -> Vec<(String, DensityMatrix)> {
    let d = linalg::product(dims);
    let mut probes = Vec::new();
    let mut ent_dims = dims.to_vec();
    ent_dims.push(d);
    let me = DensityMatrix::maximally_entangled(d);
    probes.push((
        "maximally entangled".to_string(),
        DensityMatrix::new(ent_dims.clone(), me.into_matrix()).expect("valid"),
    ));
    for i in 0..d {
        probes.push((format!("basis {i}"), DensityMatrix::basis(dims.to_vec(), i).expect("index in range")));
    }
    let mut rng = random::rng(config.seed);
    for k in 0..config.count {
        probes.push((format!("random {k}"), random::random_pure_state(&mut rng, ent_dims.clone())));
    }
    probes
}

/// Approximate equality of two sequences on the probe family.
pub fn equiv_dmix(m1: &DMixMorphism, m2: &DMixMorphism, config: &ProbeConfig) -> Result<Equivalence> {
    if m1.in_dims != m2.in_dims || m1.out_dims != m2.out_dims {
        return Err(CtcError::DimensionMismatch(format!(
            "{:?} -> {:?} vs {:?} -> {:?}",
            m1.in_dims, m1.out_dims, m2.in_dims, m2.out_dims
        )));
    }
    let mut max_deviation = 0.0;
    let mut worst_probe = String::new();
    for (name, probe) in probe_states(&m1.in_dims, config) {
        let a = eval_dmix(m1, &probe)?;
        let b = eval_dmix(m2, &probe)?;
        let dev = state::trace_distance(&a, &b)?;
        if dev > max_deviation || worst_probe.is_empty() {
            max_deviation = dev;
            worst_probe = name;
        }
    }
    Ok(Equivalence { equivalent: max_deviation <= config.tol, max_deviation, worst_probe })
}

/// Loop-free sequences collapse to a single channel.
pub fn as_channel(m: &DMixMorphism) -> Option<Result<QChannel>> {
    if m.steps.iter().any(|s| !s.cv_dims.is_empty()) {
        return None;
    }
    let mut ch = QChannel::identity(m.in_dims.clone());
    for s in &m.steps {
        ch = match channel::compose(&s.phi, &ch) {
            Ok(c) => c,
            Err(e) => return Some(Err(e)),
        };
    }
    Some(Ok(ch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{make_gate, GateSpec};
    use crate::state::trace_distance;

    fn swap() -> ElementaryMorphism {
        ElementaryMorphism::new(make_gate(&GateSpec::Swap).unwrap(), vec![2]).unwrap()
    }

    #[test]
    fn swap_induces_constant_channel() {
        let rho = DensityMatrix::qubit_plus();
        let t = induced_cv_channel(&swap(), &rho).unwrap();
        let out = t.apply(&DensityMatrix::qubit_one()).unwrap();
        assert!(trace_distance(&out, &rho).unwrap() < 1e-12);
    }

    #[test]
    fn identity_induces_identity() {
        let e = ElementaryMorphism::new(QChannel::identity(vec![2, 2]), vec![2]).unwrap();
        let t = induced_cv_channel(&e, &DensityMatrix::qubit_zero()).unwrap();
        assert!(t.distance(&QChannel::identity(vec![2])).unwrap() < 1e-12);
    }

    #[test]
    fn identity_step_passes_state_through() {
        let e = ElementaryMorphism::new(QChannel::identity(vec![2, 2]), vec![2]).unwrap();
        let rho = DensityMatrix::qubit_plus();
        assert!(trace_distance(&dctc_apply(&e, &rho).unwrap(), &rho).unwrap() < 1e-10);
    }

    #[test]
    fn cv_must_be_suffix() {
        let phi = QChannel::identity(vec![2, 3]);
        assert!(ElementaryMorphism::new(phi, vec![2]).is_err());
    }

    #[test]
    fn swap_loop_breaks_bell_pair() {
        let m = DMixMorphism::elementary(swap());
        let out = eval_dmix(&m, &DensityMatrix::bell()).unwrap();
        let want = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(trace_distance(&out, &want).unwrap() < 1e-10);
    }

    #[test]
    fn swap_loop_differs_from_identity_on_bell_probe() {
        let m = DMixMorphism::elementary(swap());
        let id = embed(&QChannel::identity(vec![2])).unwrap();
        let r = equiv_dmix(&m, &id, &ProbeConfig::default()).unwrap();
        assert!(!r.equivalent);
        assert!((r.max_deviation - 0.75).abs() < 1e-9);
        assert_eq!(r.worst_probe, "maximally entangled");
    }

    #[test]
    fn morphism_equals_itself() {
        let m = DMixMorphism::elementary(swap());
        let r = equiv_dmix(&m, &m, &ProbeConfig::default()).unwrap();
        assert!(r.equivalent);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn embedded_x_flips() {
        let m = embed(&make_gate(&GateSpec::PauliX).unwrap()).unwrap();
        let out = eval_dmix(&m, &DensityMatrix::qubit_zero()).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::qubit_one()).unwrap() < 1e-12);
    }

    #[test]
    fn embed_rejects_non_tp() {
        let f = QChannel::new(vec![linalg::identity(2).scale(0.5)], vec![2], vec![2]).unwrap();
        assert!(embed(&f).is_err());
    }

    #[test]
    fn empty_sequence_is_identity() {
        let out = eval_dmix(&DMixMorphism::identity(vec![2]), &DensityMatrix::bell()).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::bell()).unwrap() < 1e-15);
    }

    #[test]
    fn compose_checks_dims() {
        let a = embed(&QChannel::identity(vec![2])).unwrap();
        let b = embed(&QChannel::identity(vec![3])).unwrap();
        assert!(compose_dmix(&a, &b).is_err());
    }
}

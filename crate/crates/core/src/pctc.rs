//! Loop semantics by post-selection, and the category of CP maps up to
//! normalization.

use crate::channel::{self, QChannel};
use crate::error::{CtcError, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::state::DensityMatrix;

/// Traces below this value count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Partial trace of every Kraus operator over the trailing loop system:
/// `K ↦ Σᵢ (I ⊗ <i|) K (I ⊗ |i>)`. The result is CP but in general not
/// trace preserving.
pub fn pctc_superop(phi: &QChannel, cv_dims: &[usize]) -> Result<QChannel> {
    let suffix = |dims: &[usize]| dims.len() >= cv_dims.len() && dims[dims.len() - cv_dims.len()..] == cv_dims[..];
    if !suffix(phi.in_dims()) || !suffix(phi.out_dims()) {
        return Err(CtcError::DimensionMismatch(format!(
            "loop dims {cv_dims:?} are not a suffix of {:?} -> {:?}",
            phi.in_dims(),
            phi.out_dims()
        )));
    }
    let h_dims = phi.in_dims()[..phi.in_dims().len() - cv_dims.len()].to_vec();
    let k_dims = phi.out_dims()[..phi.out_dims().len() - cv_dims.len()].to_vec();
    let dc = linalg::product(cv_dims);
    let dh = linalg::product(&h_dims);
    let dk = linalg::product(&k_dims);
    let kraus = phi
        .kraus()
        .iter()
        .map(|k| ComplexMatrix::from_fn(dk, dh, |r, col| (0..dc).map(|i| k[(r * dc + i, col * dc + i)]).sum()))
        .collect();
    QChannel::new(kraus, h_dims, k_dims)
}

/// A CP map with `Tr[f(I/d)] = 1`, or the zero map.
#[derive(Debug, Clone)]
pub struct MixSymMorphism {
    map: Option<QChannel>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl MixSymMorphism {
    pub fn zero(in_dims: Vec<usize>, out_dims: Vec<usize>) -> Self {
        Self { map: None, in_dims, out_dims }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        Self { map: Some(QChannel::identity(dims.clone())), in_dims: dims.clone(), out_dims: dims }
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_none()
    }

    pub fn map(&self) -> Option<&QChannel> {
        self.map.as_ref()
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    /// `Tr[f(I/d)]`, zero for the zero morphism.
    pub fn normalizer(&self) -> f64 {
        self.map.as_ref().map_or(0.0, normalizer)
    }

    pub fn tensor(&self, other: &MixSymMorphism) -> MixSymMorphism {
        let in_dims = [&self.in_dims[..], &other.in_dims].concat();
        let out_dims = [&self.out_dims[..], &other.out_dims].concat();
        match (&self.map, &other.map) {
            (Some(a), Some(b)) => Self { map: Some(a.tensor(b)), in_dims, out_dims },
            _ => Self::zero(in_dims, out_dims),
        }
    }

    /// Applies the map and renormalizes the output.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<PctcOutcome> {
        match &self.map {
            None => {
                if rho.dims() != self.in_dims.as_slice() {
                    return Err(CtcError::DimensionMismatch("state does not match morphism input".into()));
                }
                Ok(PctcOutcome::NonNormalizable { weight: 0.0 })
            }
            Some(f) => renormalize(f, rho),
        }
    }
}

fn normalizer(f: &QChannel) -> f64 {
    let d = f.in_dim() as f64;
    linalg::trace(&f.kraus_sum()).re / d
}

/// Rescales a CP map to satisfy `Tr[f(I/d)] = 1`, or returns zero.
pub fn mixsym_lift(f: &QChannel) -> Result<MixSymMorphism> {
    let n = normalizer(f);
    let in_dims = f.in_dims().to_vec();
    let out_dims = f.out_dims().to_vec();
    if n <= ZERO_THRESHOLD {
        return Ok(MixSymMorphism::zero(in_dims, out_dims));
    }
    let map = if (n - 1.0).abs() <= 1e-15 { f.clone() } else { f.scale(1.0 / n)? };
    Ok(MixSymMorphism { map: Some(map), in_dims, out_dims })
}

/// `f ∘ g`, renormalized; zero absorbs.
pub fn mixsym_compose(f: &MixSymMorphism, g: &MixSymMorphism) -> Result<MixSymMorphism> {
    if g.out_dims != f.in_dims {
        return Err(CtcError::DimensionMismatch(format!(
            "cannot compose: output {:?} into input {:?}",
            g.out_dims, f.in_dims
        )));
    }
    match (&f.map, &g.map) {
        (Some(a), Some(b)) => mixsym_lift(&channel::compose(a, b)?),
        _ => Ok(MixSymMorphism::zero(g.in_dims.clone(), f.out_dims.clone())),
    }
}

#[derive(Debug, Clone)]
pub enum PctcOutcome {
    /// Renormalized output and the trace `Tr[f(ρ)]` before renormalization.
    State { state: DensityMatrix, weight: f64 },
    /// The output trace is at most [`ZERO_THRESHOLD`]: the process cannot
    /// happen on this input.
    NonNormalizable { weight: f64 },
}

impl PctcOutcome {
    pub fn state(&self) -> Option<&DensityMatrix> {
        match self {
            Self::State { state, .. } => Some(state),
            Self::NonNormalizable { .. } => None,
        }
    }

    pub fn into_state(self) -> Option<DensityMatrix> {
        match self {
            Self::State { state, .. } => Some(state),
            Self::NonNormalizable { .. } => None,
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            Self::State { weight, .. } | Self::NonNormalizable { weight } => *weight,
        }
    }

    pub fn is_normalizable(&self) -> bool {
        matches!(self, Self::State { .. })
    }
}

/// Applies a CP map to the leading subsystems of `ρ` and renormalizes.
fn renormalize(f: &QChannel, rho: &DensityMatrix) -> Result<PctcOutcome> {
    let n = f.in_dims().len();
    if rho.dims().len() < n || rho.dims()[..n] != *f.in_dims() {
        return Err(CtcError::DimensionMismatch(format!(
            "state dims {:?} do not start with the map input {:?}",
            rho.dims(),
            f.in_dims()
        )));
    }
    let rest = rho.dims()[n..].to_vec();
    let full = f.tensor(&QChannel::identity(rest));
    match channel::normalized_output(&full, rho, ZERO_THRESHOLD)? {
        Some(state) => {
            let weight = linalg::trace(&full.apply_operator(rho.matrix())).re;
            Ok(PctcOutcome::State { state, weight })
        }
        None => {
            Ok(PctcOutcome::NonNormalizable { weight: linalg::trace(&full.apply_operator(rho.matrix())).re.max(0.0) })
        }
    }
}

/// Closes the loop of `phi` by post-selection and applies the result to `ρ`
/// (trailing subsystems of `ρ` are an ancilla).
pub fn pctc_apply(phi: &QChannel, cv_dims: &[usize], rho: &DensityMatrix) -> Result<PctcOutcome> {
    renormalize(&pctc_superop(phi, cv_dims)?, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{make_gate, GateSpec};
    use crate::state::trace_distance;

    #[test]
    fn swap_yanks_to_identity() {
        for d in [2, 3] {
            let swap = QChannel::permutation(&[d, d], &[1, 0]).unwrap();
            let e = pctc_superop(&swap, &[d]).unwrap();
            assert!(e.distance(&QChannel::identity(vec![d])).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trivial_loop_scales_by_dimension_squared() {
        let h = make_gate(&GateSpec::Hadamard).unwrap();
        let phi = h.tensor(&QChannel::identity(vec![3]));
        let e = pctc_superop(&phi, &[3]).unwrap();
        assert!((normalizer(&e) - 9.0).abs() < 1e-12);
        let lifted = mixsym_lift(&e).unwrap();
        assert!(lifted.map().unwrap().distance(&h).unwrap() < 1e-12);
    }

    #[test]
    fn lift_examples() {
        let x = make_gate(&GateSpec::PauliX).unwrap();
        assert!(mixsym_lift(&x).unwrap().map().unwrap().distance(&x).unwrap() < 1e-15);
        assert!(mixsym_lift(&QChannel::zero(vec![2], vec![2])).unwrap().is_zero());
        let doubled = x.scale(2.0).unwrap();
        assert!(mixsym_lift(&doubled).unwrap().map().unwrap().distance(&x).unwrap() < 1e-12);
    }

    #[test]
    fn orthogonal_post_selection_is_zero() {
        let post = QChannel::new(
            vec![ComplexMatrix::from_fn(1, 2, |_, j| linalg::c(f64::from(u8::from(j == 0)), 0.0))],
            vec![2],
            vec![],
        )
        .unwrap();
        let f = mixsym_lift(&post).unwrap();
        let g = mixsym_lift(&QChannel::prepare(&DensityMatrix::qubit_one())).unwrap();
        assert!(mixsym_compose(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn cptp_compose_is_ordinary() {
        let x = mixsym_lift(&make_gate(&GateSpec::PauliX).unwrap()).unwrap();
        let xx = mixsym_compose(&x, &x).unwrap();
        assert!(xx.map().unwrap().distance(&QChannel::identity(vec![2])).unwrap() < 1e-12);
        let z = MixSymMorphism::zero(vec![2], vec![2]);
        assert!(mixsym_compose(&z, &x).unwrap().is_zero());
        assert!(mixsym_compose(&x, &z).unwrap().is_zero());
    }

    #[test]
    fn swap_on_half_of_bell_keeps_it() {
        let swap = make_gate(&GateSpec::Swap).unwrap();
        let out = pctc_apply(&swap, &[2], &DensityMatrix::bell()).unwrap();
        assert!(trace_distance(out.state().unwrap(), &DensityMatrix::bell()).unwrap() < 1e-12);
    }

    #[test]
    fn zero_weight_is_not_normalizable() {
        let z = MixSymMorphism::zero(vec![2], vec![2]);
        assert!(!z.apply(&DensityMatrix::qubit_zero()).unwrap().is_normalizable());
    }
}

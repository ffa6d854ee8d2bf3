//! Completely positive maps in Kraus form.

use crate::error::{CtcError, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};
use crate::state::DensityMatrix;

/// Tolerance for the trace-preservation check on construction.
pub const TP_TOL: f64 = 1e-9;

/// Kraus-rank threshold (relative to the Choi side) above which compositions
/// are recompressed through the Choi matrix.
const COMPRESS_FACTOR: usize = 1;

#[derive(Debug, Clone)]
pub struct QChannel {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    kraus: Vec<ComplexMatrix>,
    tp: bool,
}

/// Linearized channel acting on row-major vectorised operators.
#[derive(Debug, Clone)]
pub struct SuperMatrix {
    pub matrix: ComplexMatrix,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
}

impl SuperMatrix {
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let dout = linalg::product(&self.out_dims);
        linalg::unvec_rows(&(&self.matrix * linalg::vec_rows(m)), dout, dout)
    }
}

impl QChannel {
    /// Builds a channel from Kraus operators. The trace-preserving flag is set
    /// when `Σ K†K = I` holds within [`TP_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let mut ch = Self::unchecked(kraus, in_dims, out_dims)?;
        ch.tp = ch.is_cptp(TP_TOL);
        Ok(ch)
    }

    /// Like [`QChannel::new`] but fails unless the map is trace preserving.
    pub fn new_cptp(kraus: Vec<ComplexMatrix>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let ch = Self::new(kraus, in_dims, out_dims)?;
        if !ch.tp {
            return Err(CtcError::InvalidChannel(format!(
                "Kraus operators are not trace preserving (defect {:e})",
                ch.tp_defect()
            )));
        }
        Ok(ch)
    }

    fn unchecked(kraus: Vec<ComplexMatrix>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        if in_dims.iter().chain(&out_dims).any(|&d| d == 0) {
            return Err(CtcError::InvalidChannel("zero dimension".into()));
        }
        if kraus.is_empty() {
            return Err(CtcError::InvalidChannel("empty Kraus list".into()));
        }
        let din = linalg::product(&in_dims);
        let dout = linalg::product(&out_dims);
        for (k, m) in kraus.iter().enumerate() {
            if m.nrows() != dout || m.ncols() != din {
                return Err(CtcError::DimensionMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {dout}x{din}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !linalg::is_finite(m) {
                return Err(CtcError::InvalidChannel(format!("Kraus operator {k} has a non-finite entry")));
            }
        }
        Ok(Self { in_dims, out_dims, kraus, tp: false })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = linalg::product(&dims);
        Self { kraus: vec![linalg::identity(d)], in_dims: dims.clone(), out_dims: dims, tp: true }
    }

    /// The zero map, used for post-selection failures.
    pub fn zero(in_dims: Vec<usize>, out_dims: Vec<usize>) -> Self {
        let k = ComplexMatrix::zeros(linalg::product(&out_dims), linalg::product(&in_dims));
        Self { kraus: vec![k], in_dims, out_dims, tp: false }
    }

    /// Conjugation by a unitary on `dims`.
    pub fn from_unitary(u: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let d = linalg::product(&dims);
        if u.nrows() != d || u.ncols() != d {
            return Err(CtcError::DimensionMismatch(format!("unitary is {}x{}, dims {dims:?}", u.nrows(), u.ncols())));
        }
        let defect = linalg::max_abs(&(u.adjoint() * &u - linalg::identity(d)));
        if defect > TP_TOL {
            return Err(CtcError::InvalidChannel(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(Self { kraus: vec![u], in_dims: dims.clone(), out_dims: dims, tp: true })
    }

    /// Wire permutation: output position `j` carries input subsystem `perm[j]`.
    pub fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self> {
        let p = linalg::permutation_matrix(dims, perm)?;
        let out_dims = perm.iter().map(|&i| dims[i]).collect();
        Ok(Self { kraus: vec![p], in_dims: dims.to_vec(), out_dims, tp: true })
    }

    /// Trace over all of `dims`.
    pub fn discard(dims: Vec<usize>) -> Self {
        let d = linalg::product(&dims);
        let kraus = (0..d).map(|i| ComplexMatrix::from_fn(1, d, |_, j| c(f64::from(u8::from(i == j)), 0.0))).collect();
        Self { kraus, in_dims: dims, out_dims: vec![], tp: true }
    }

    /// Preparation of a fixed state from the trivial system.
    pub fn prepare(rho: &DensityMatrix) -> Self {
        let (vals, vecs) = linalg::eigh(rho.matrix());
        let mut kraus: Vec<ComplexMatrix> = vals
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-14)
            .map(|(k, &l)| ComplexMatrix::from_column_slice(rho.dim(), 1, vecs.column(k).as_slice()).scale(l.sqrt()))
            .collect();
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(rho.dim(), 1));
        }
        Self { kraus, in_dims: vec![], out_dims: rho.dims().to_vec(), tp: true }
    }

    /// Partial trace channel on `dims` keeping the listed subsystems in order.
    pub fn partial_trace(dims: Vec<usize>, keep: &[usize]) -> Result<Self> {
        for &k in keep {
            if k >= dims.len() {
                return Err(CtcError::IndexOutOfRange { index: k, count: dims.len() });
            }
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
        let mut perm = keep_sorted.clone();
        perm.extend(&traced);
        let kept: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
        let gone: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let p = Self::permutation(&dims, &perm)?;
        let t = Self::identity(kept).tensor(&Self::discard(gone));
        p.then(&t)
    }

    /// Builds the CP map with the given action on matrix units, through its
    /// Choi matrix. Fails if the map is not completely positive.
    pub fn from_linear_map(
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let din = linalg::product(&in_dims);
        let dout = linalg::product(&out_dims);
        let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let img = f(&linalg::unit(din, i, j));
                if img.nrows() != dout || img.ncols() != dout {
                    return Err(CtcError::DimensionMismatch("linear map output shape".into()));
                }
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&img);
            }
        }
        Self::from_choi(&choi, in_dims, out_dims)
    }

    /// Inverse of [`QChannel::choi`].
    pub fn from_choi(choi: &ComplexMatrix, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let din = linalg::product(&in_dims);
        let dout = linalg::product(&out_dims);
        if choi.nrows() != din * dout || choi.ncols() != din * dout {
            return Err(CtcError::DimensionMismatch("Choi matrix shape".into()));
        }
        let (vals, vecs) = linalg::eigh(&linalg::hermitize(choi));
        let scale = vals.iter().fold(1.0f64, |a, &l| a.max(l.abs()));
        if vals.first().copied().unwrap_or(0.0) < -1e-9 * scale {
            return Err(CtcError::InvalidChannel(format!(
                "map is not completely positive (Choi eigenvalue {:e})",
                vals[0]
            )));
        }
        let mut kraus = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l <= 1e-13 * scale {
                continue;
            }
            let v = vecs.column(k);
            let mut m = ComplexMatrix::zeros(dout, din);
            for i in 0..din {
                for o in 0..dout {
                    m[(o, i)] = v[i * dout + o] * l.sqrt();
                }
            }
            kraus.push(m);
        }
        if kraus.is_empty() {
            return Ok(Self::zero(in_dims, out_dims));
        }
        Self::new(kraus, in_dims, out_dims)
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dim(&self) -> usize {
        linalg::product(&self.in_dims)
    }

    pub fn out_dim(&self) -> usize {
        linalg::product(&self.out_dims)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Trace-preserving intent recorded at construction.
    pub fn tp_flag(&self) -> bool {
        self.tp
    }

    /// `max |Σ K†K − I|`.
    pub fn tp_defect(&self) -> f64 {
        linalg::max_abs(&(self.kraus_sum() - linalg::identity(self.in_dim())))
    }

    /// `Σ K†K`.
    pub fn kraus_sum(&self) -> ComplexMatrix {
        let d = self.in_dim();
        self.kraus.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.kraus.iter().all(|k| linalg::max_abs(k) <= tol)
    }

    /// `Σ K X K†` for an arbitrary operator on the input space.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.out_dim();
        self.kraus.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k * x * k.adjoint())
    }

    /// Applies the channel to a state. Non-trace-preserving maps fail here
    /// unless they happen to preserve this particular trace.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_input(rho.dims())?;
        let out = self.apply_operator(rho.matrix());
        let tr = linalg::trace(&out).re;
        if (tr - 1.0).abs() > TP_TOL {
            return Err(CtcError::InvalidState(format!("channel output has trace {tr}")));
        }
        DensityMatrix::from_computed(self.out_dims.clone(), out)
    }

    /// Applies the channel to the leading subsystems of `rho`, whose dims must
    /// start with `in_dims`. Result dims are `out_dims` followed by the rest.
    pub fn apply_prefix(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.in_dims.len();
        if rho.dims().len() < n || rho.dims()[..n] != self.in_dims[..] {
            return Err(CtcError::DimensionMismatch(format!(
                "channel input {:?} is not a prefix of {:?}",
                self.in_dims,
                rho.dims()
            )));
        }
        let rest = rho.dims()[n..].to_vec();
        self.tensor(&Self::identity(rest)).apply(rho)
    }

    /// Applies the channel to the subsystems `targets` of `rho` (in that
    /// order). Result dims are `out_dims` followed by the untouched subsystems.
    pub fn apply_on(&self, rho: &DensityMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        let n = rho.dims().len();
        let mut perm = targets.to_vec();
        perm.extend((0..n).filter(|i| !targets.contains(i)));
        linalg::check_permutation(&perm, n)?;
        self.apply_prefix(&rho.permute(&perm)?)
    }

    fn check_input(&self, dims: &[usize]) -> Result<()> {
        if dims != self.in_dims.as_slice() {
            return Err(CtcError::DimensionMismatch(format!(
                "state dims {dims:?} do not match channel input {:?}",
                self.in_dims
            )));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &QChannel) -> QChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(linalg::kron(a, b));
            }
        }
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        QChannel { kraus, in_dims, out_dims, tp: self.tp && other.tp }
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &QChannel) -> Result<QChannel> {
        compose(next, self)
    }

    /// Rescales the map by a non-negative factor.
    pub fn scale(&self, factor: f64) -> Result<QChannel> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(CtcError::InvalidChannel(format!("scale factor {factor}")));
        }
        let s = factor.sqrt();
        let kraus = self.kraus.iter().map(|k| k.scale(s)).collect();
        QChannel::new(kraus, self.in_dims.clone(), self.out_dims.clone())
    }

    /// Choi matrix `Σ_ij |i><j| ⊗ Φ(|i><j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let din = self.in_dim();
        let dout = self.out_dim();
        let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
        for k in &self.kraus {
            let mut v = ComplexVector::zeros(din * dout);
            for i in 0..din {
                for o in 0..dout {
                    v[i * dout + o] = k[(o, i)];
                }
            }
            choi += &v * v.adjoint();
        }
        choi
    }

    /// Re-expresses the map with at most `din·dout` Kraus operators.
    pub fn compress(&self) -> Result<QChannel> {
        let mut ch = Self::from_choi(&self.choi(), self.in_dims.clone(), self.out_dims.clone())?;
        if self.tp {
            ch.tp = ch.is_cptp(TP_TOL);
        }
        Ok(ch)
    }

    /// `S = Σ K ⊗ conj(K)` acting on row-major vectorisations.
    pub fn as_supermatrix(&self) -> SuperMatrix {
        let din = self.in_dim();
        let dout = self.out_dim();
        let mut s = ComplexMatrix::zeros(dout * dout, din * din);
        for k in &self.kraus {
            s += linalg::kron(k, &k.map(|z| z.conj()));
        }
        SuperMatrix { matrix: s, in_dims: self.in_dims.clone(), out_dims: self.out_dims.clone() }
    }

    /// Maximum entry difference between the Choi matrices of two maps.
    pub fn distance(&self, other: &QChannel) -> Result<f64> {
        if self.in_dims != other.in_dims || self.out_dims != other.out_dims {
            return Err(CtcError::DimensionMismatch("channel distance".into()));
        }
        Ok(linalg::max_abs(&(self.choi() - other.choi())))
    }
}

/// `g ∘ f` with Kraus set `{K_g K_f}`, recompressed when the Kraus count
/// exceeds the Choi rank bound.
pub fn compose(g: &QChannel, f: &QChannel) -> Result<QChannel> {
    if g.in_dims != f.out_dims {
        if linalg::product(&g.in_dims) != linalg::product(&f.out_dims) {
            return Err(CtcError::DimensionMismatch(format!(
                "cannot compose: output {:?} into input {:?}",
                f.out_dims, g.in_dims
            )));
        }
        return Err(CtcError::DimensionMismatch(format!(
            "subsystem layout {:?} does not match {:?}",
            f.out_dims, g.in_dims
        )));
    }
    let mut kraus = Vec::with_capacity(g.kraus.len() * f.kraus.len());
    for a in &g.kraus {
        for b in &f.kraus {
            kraus.push(a * b);
        }
    }
    let ch = QChannel { kraus, in_dims: f.in_dims.clone(), out_dims: g.out_dims.clone(), tp: g.tp && f.tp };
    if ch.kraus.len() > COMPRESS_FACTOR * ch.in_dim() * ch.out_dim() && ch.kraus.len() > 4 {
        return ch.compress();
    }
    Ok(ch)
}

/// Free-function form of [`QChannel::apply`].
pub fn apply_channel(phi: &QChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    phi.apply(rho)
}

pub fn channel_from_unitary(u: ComplexMatrix, dims: Vec<usize>) -> Result<QChannel> {
    QChannel::from_unitary(u, dims)
}

/// Composes `phi` with the partial trace that keeps the listed output subsystems.
pub fn partial_trace_channel(phi: &QChannel, keep: &[usize]) -> Result<QChannel> {
    phi.then(&QChannel::partial_trace(phi.out_dims.clone(), keep)?)
}

/// Unit-trace helper for maps that are only CP: scales the output to trace 1
/// or returns `None` when the trace is below `threshold`.
pub fn normalized_output(phi: &QChannel, rho: &DensityMatrix, threshold: f64) -> Result<Option<DensityMatrix>> {
    phi.check_input(rho.dims())?;
    let out = phi.apply_operator(rho.matrix());
    let tr = linalg::trace(&out).re;
    if tr <= threshold {
        return Ok(None);
    }
    Ok(Some(DensityMatrix::from_computed(phi.out_dims.clone(), out.unscale(tr))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::trace_distance;

    fn pauli_x() -> QChannel {
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        QChannel::from_unitary(x, vec![2]).unwrap()
    }

    #[test]
    fn tensor_counts_kraus() {
        let dep = QChannel::new_cptp(vec![linalg::unit(2, 0, 0), linalg::unit(2, 1, 1)], vec![2], vec![2]).unwrap();
        let three = QChannel::new_cptp(
            vec![linalg::unit(3, 0, 0), linalg::unit(3, 1, 1), linalg::unit(3, 2, 2)],
            vec![3],
            vec![3],
        )
        .unwrap();
        let t = dep.tensor(&three);
        assert_eq!(t.kraus().len(), 6);
        assert_eq!(t.in_dims(), &[2, 3]);
        assert!(t.tp_flag());
    }

    #[test]
    fn compose_x_twice_is_identity() {
        let xx = compose(&pauli_x(), &pauli_x()).unwrap();
        assert!(xx.distance(&QChannel::identity(vec![2])).unwrap() < 1e-15);
    }

    #[test]
    fn supermatrix_of_identity() {
        let s = QChannel::identity(vec![2]).as_supermatrix();
        assert_eq!(s.matrix, linalg::identity(4));
    }

    #[test]
    fn scaled_identity_is_not_cptp() {
        let ch = QChannel::new(vec![linalg::identity(2).scale(0.5)], vec![2], vec![2]).unwrap();
        assert!(!ch.is_cptp(1e-9));
        assert!(!ch.tp_flag());
    }

    #[test]
    fn discard_gives_unit_state() {
        let out = QChannel::discard(vec![2]).apply(&DensityMatrix::qubit_plus()).unwrap();
        assert_eq!(out.dims(), &[] as &[usize]);
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn choi_roundtrip() {
        let x = pauli_x();
        let back = QChannel::from_choi(&x.choi(), vec![2], vec![2]).unwrap();
        assert!(back.distance(&x).unwrap() < 1e-12);
        assert!(back.tp_flag());
    }

    #[test]
    fn transpose_is_not_cp() {
        let err = QChannel::from_linear_map(vec![2], vec![2], |m| m.transpose());
        assert!(matches!(err, Err(CtcError::InvalidChannel(_))));
    }

    #[test]
    fn partial_trace_channel_matches_state_partial_trace() {
        let rho = DensityMatrix::qubit_plus().tensor(&DensityMatrix::maximally_mixed(vec![3]));
        let ch = QChannel::partial_trace(vec![2, 3], &[1]).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::maximally_mixed(vec![3])).unwrap() < 1e-14);
    }

    #[test]
    fn apply_on_places_output_first() {
        let rho = DensityMatrix::qubit_zero().tensor(&DensityMatrix::qubit_plus());
        let out = pauli_x().apply_on(&rho, &[0]).unwrap();
        let want = DensityMatrix::qubit_one().tensor(&DensityMatrix::qubit_plus());
        assert!(trace_distance(&out, &want).unwrap() < 1e-14);
        let out = pauli_x().apply_on(&rho, &[1]).unwrap();
        let want = DensityMatrix::qubit_plus().tensor(&DensityMatrix::qubit_zero());
        assert!(trace_distance(&out, &want).unwrap() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(matches!(pauli_x().apply(&DensityMatrix::bell()), Err(CtcError::DimensionMismatch(_))));
        assert!(compose(&pauli_x(), &QChannel::identity(vec![3])).is_err());
    }
}

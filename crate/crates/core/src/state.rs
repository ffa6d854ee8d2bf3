//! Normalized density matrices with an explicit subsystem layout.

use crate::error::{CtcError, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};

/// Tolerance applied to hermiticity, positivity and trace on construction.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` as a normalized state on `dims`. Out-of-tolerance
    /// input is rejected, never repaired.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        if dims.contains(&0) {
            return Err(CtcError::InvalidState(format!("zero dimension in {dims:?}")));
        }
        let d = linalg::product(&dims);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(CtcError::DimensionMismatch(format!(
                "matrix is {}x{} but dims {:?} need {d}x{d}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            )));
        }
        if !linalg::is_finite(&matrix) {
            return Err(CtcError::InvalidState("non-finite entry".into()));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > STATE_TOL {
            return Err(CtcError::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(CtcError::InvalidState(format!("trace {tr} != 1")));
        }
        let min = linalg::eigvalsh(&matrix).first().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(CtcError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { dims, matrix })
    }

    /// Symmetrizes and trace-normalizes the output of an already validated
    /// computation before checking it. Only rounding noise is removed here.
    pub(crate) fn from_computed(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let mut m = linalg::hermitize(&matrix);
        let tr = linalg::trace(&m).re;
        if tr <= 0.0 {
            return Err(CtcError::InvalidState(format!("computed trace {tr:e}")));
        }
        m /= c(tr, 0.0);
        Self::new(dims, m)
    }

    pub fn from_pure(dims: Vec<usize>, psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(CtcError::InvalidState("zero vector".into()));
        }
        let v = psi.unscale(norm);
        Self::new(dims, linalg::projector(&v))
    }

    /// Computational basis state `|index>` on `dims` (index into the composite space).
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let d = linalg::product(&dims);
        if index >= d {
            return Err(CtcError::IndexOutOfRange { index, count: d });
        }
        Self::from_pure(dims, &linalg::ket(d, index))
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d = linalg::product(&dims);
        Self { matrix: linalg::identity(d).scale(1.0 / d as f64), dims }
    }

    /// The state of the trivial system (the scalar 1).
    pub fn unit() -> Self {
        Self { dims: vec![], matrix: linalg::identity(1) }
    }

    /// `(1/d) Σ |ii><jj|` on `[d, d]`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut psi = ComplexVector::zeros(d * d);
        for i in 0..d {
            psi[i * d + i] = c(1.0, 0.0);
        }
        Self::from_pure(vec![d, d], &psi).expect("maximally entangled state is valid")
    }

    pub fn bell() -> Self {
        Self::maximally_entangled(2)
    }

    pub fn qubit_zero() -> Self {
        Self::basis(vec![2], 0).unwrap()
    }

    pub fn qubit_one() -> Self {
        Self::basis(vec![2], 1).unwrap()
    }

    pub fn qubit_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_pure(vec![2], &ComplexVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])).unwrap()
    }

    pub fn qubit_minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_pure(vec![2], &ComplexVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)])).unwrap()
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(dims: Vec<usize>, probs: &[f64]) -> Result<Self> {
        let d = linalg::product(&dims);
        if probs.len() != d {
            return Err(CtcError::DimensionMismatch(format!("{} probabilities for dimension {d}", probs.len())));
        }
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(d, probs.iter().map(|&p| c(p, 0.0))));
        Self::new(dims, m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Probabilities of the computational basis outcomes.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { dims, matrix: linalg::kron(&self.matrix, &other.matrix) }
    }

    /// Keeps the subsystems listed in `keep`, in their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::partial_trace(&self.matrix, &self.dims, keep)?;
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        let dims = k.iter().map(|&i| self.dims[i]).collect();
        Ok(DensityMatrix { dims, matrix: m })
    }

    /// Position `j` of the result holds subsystem `perm[j]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::permute_operator(&self.matrix, &self.dims, perm)?;
        let dims = perm.iter().map(|&p| self.dims[p]).collect();
        Ok(DensityMatrix { dims, matrix: m })
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }
}

/// `-Σ λ log₂ λ` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    vals.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum::<f64>().max(0.0)
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dims != sigma.dims {
        return Err(CtcError::DimensionMismatch(format!(
            "trace distance between dims {:?} and {:?}",
            rho.dims, sigma.dims
        )));
    }
    Ok(trace_norm_half(&(&rho.matrix - &sigma.matrix)))
}

/// `(1/2) Σ |λ|` of a Hermitian matrix.
pub(crate) fn trace_norm_half(m: &ComplexMatrix) -> f64 {
    0.5 * linalg::eigvalsh(m).iter().map(|l| l.abs()).sum::<f64>()
}

/// Fidelity `(Tr sqrt(sqrt(ρ) σ sqrt(ρ)))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dims != sigma.dims {
        return Err(CtcError::DimensionMismatch("fidelity".into()));
    }
    let sq = linalg::hermitian_function(&rho.matrix, |l| l.max(0.0).sqrt());
    let inner = &sq * &sigma.matrix * &sq;
    let s: f64 = linalg::eigvalsh(&inner).iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(s * s)
}

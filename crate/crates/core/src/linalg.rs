//! Dense complex linear algebra on top of `nalgebra`.
//!
//! Multi-partite operators use the usual Kronecker convention: the first
//! subsystem in a dimension list is the most significant digit of the
//! composite index.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CtcError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    ms.into_iter().fold(ComplexMatrix::from_element(1, 1, ONE), |acc, m| kron(&acc, m))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = hermitize(m);
    let mut eig = SymmetricEigen::new(h.clone());
    if !eigen_ok(&h, &eig) {
        // The tridiagonal reduction can break down on very sparse input;
        // diagonalizing a fixed unitary rotation of the matrix avoids it.
        let v = crate::random::random_unitary(&mut crate::random::rng(0x5eed), h.nrows());
        let rotated = SymmetricEigen::new(hermitize(&(v.adjoint() * &h * &v)));
        eig = SymmetricEigen { eigenvectors: v * rotated.eigenvectors, eigenvalues: rotated.eigenvalues };
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

fn eigen_ok(h: &ComplexMatrix, eig: &SymmetricEigen<Complex64, nalgebra::Dyn>) -> bool {
    if !eig.eigenvalues.iter().all(|v| v.is_finite()) || !is_finite(&eig.eigenvectors) {
        return false;
    }
    let v = &eig.eigenvectors;
    let lambda = ComplexMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(l, 0.0)));
    let scale = max_abs(h).max(1.0) * h.nrows() as f64;
    max_abs(&(h * v - v * lambda)) <= 1e-10 * scale
}

/// Orthonormal basis of the column space of `m`, by Gram-Schmidt with
/// column pivoting and reorthogonalization. Columns whose remainder falls
/// below `tol` times the largest column norm are dropped.
pub fn column_space(m: &ComplexMatrix, tol: f64) -> Vec<ComplexVector> {
    let mut rest: Vec<ComplexVector> = m.column_iter().map(|col| col.into_owned()).collect();
    let cutoff = tol * rest.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<ComplexVector> = Vec::new();
    while !rest.is_empty() {
        let (k, norm) =
            rest.iter().enumerate().map(|(k, v)| (k, v.norm())).max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        if norm <= cutoff || norm == 0.0 {
            break;
        }
        let mut q = rest.swap_remove(k);
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&q);
                q -= b * overlap;
            }
        }
        let n = q.norm();
        if n <= cutoff || n == 0.0 {
            continue;
        }
        q.unscale_mut(n);
        for v in &mut rest {
            let overlap = q.dotc(v);
            *v -= &q * overlap;
        }
        basis.push(q);
    }
    basis
}

pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    eigh(m).0
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (vals, vecs) = eigh(m);
    let diag =
        ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(vals.len(), vals.iter().map(|&v| c(f(v), 0.0))));
    &vecs * diag * vecs.adjoint()
}

/// Real Hilbert–Schmidt inner product `Re Tr[a† b]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn ket(d: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[index] = ONE;
    v
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Matrix unit `|i><j|` of side `d`.
pub fn unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(CtcError::NotAPermutation(perm.to_vec()));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(CtcError::NotAPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

/// Unitary that maps subsystem order `dims` to the order given by `perm`:
/// position `j` of the output holds old subsystem `perm[j]`.
pub fn permutation_matrix(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    check_permutation(perm, dims.len())?;
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let d = product(dims);
    let mut m = ComplexMatrix::zeros(d, d);
    let mut old = vec![0; dims.len()];
    let mut new = vec![0; dims.len()];
    for index in 0..d {
        digits(index, dims, &mut old);
        for (j, &p) in perm.iter().enumerate() {
            new[j] = old[p];
        }
        m[(undigits(&new, &new_dims), index)] = ONE;
    }
    Ok(m)
}

/// Permutes the subsystems of a square operator on `dims`.
pub fn permute_operator(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    if m.nrows() != product(dims) || m.ncols() != product(dims) {
        return Err(CtcError::DimensionMismatch(format!("operator is {}x{}, dims {:?}", m.nrows(), m.ncols(), dims)));
    }
    check_permutation(perm, dims.len())?;
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let d = product(dims);
    let mut map = vec![0usize; d];
    let mut old = vec![0; dims.len()];
    let mut new = vec![0; dims.len()];
    for (index, slot) in map.iter_mut().enumerate() {
        digits(index, dims, &mut old);
        for (j, &p) in perm.iter().enumerate() {
            new[j] = old[p];
        }
        *slot = undigits(&new, &new_dims);
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        for col in 0..d {
            out[(map[r], map[col])] = m[(r, col)];
        }
    }
    Ok(out)
}

/// Partial trace of a square operator keeping the subsystems in `keep`
/// (in their original relative order).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
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
    let permuted = permute_operator(m, dims, &perm)?;
    let dk: usize = keep_sorted.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for r in 0..dk {
        for col in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += permuted[(r * dt + t, col * dt + t)];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

/// Row-major vectorisation.
pub fn vec_rows(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(m.nrows() * m.ncols(), m.transpose().iter().copied())
}

pub fn unvec_rows(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(rows, cols, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_space_of_oblique_projector() {
        // Rank-two oblique projector on C^4: P = N (M† N)^-1 M†.
        let n = ComplexMatrix::from_fn(4, 2, |i, j| c((i + 2 * j) as f64 * 0.3 + 1.0, i as f64 * 0.1));
        let m = ComplexMatrix::from_fn(4, 2, |i, j| c(1.0 + (i * j) as f64, -0.2 * j as f64));
        let p = &n * (m.adjoint() * &n).try_inverse().unwrap() * m.adjoint();
        let basis = column_space(&p, 1e-10);
        assert_eq!(basis.len(), 2);
        for (a, u) in basis.iter().enumerate() {
            assert!((&p * u - u).norm() < 1e-10);
            for w in &basis[a + 1..] {
                assert!(u.dotc(w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_survives_sparse_rank_one() {
        use crate::channel::QChannel;
        use crate::state::DensityMatrix;
        let choi = QChannel::identity(vec![2; 3]).tensor(&QChannel::prepare(&DensityMatrix::qubit_zero())).choi();
        assert!(!SymmetricEigen::new(choi.clone()).eigenvalues.iter().all(|v| v.is_finite()));
        let (vals, vecs) = eigh(&choi);
        let n = vals.len();
        assert!(vals.iter().all(|v| v.is_finite()) && is_finite(&vecs));
        assert!((vals[n - 1] - 8.0).abs() < 1e-9);
        assert!(vals[..n - 1].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn permutation_matrix_swaps_two_qubits() {
        let p = permutation_matrix(&[2, 2], &[1, 0]).unwrap();
        let v = ket(4, 1); // |01>
        assert_eq!(&p * v, ket(4, 2)); // |10>
    }

    #[test]
    fn permute_operator_matches_unitary_conjugation() {
        let dims = [2, 3, 2];
        let m = ComplexMatrix::from_fn(12, 12, |r, k| c(r as f64, k as f64 * 0.5));
        let perm = [2, 0, 1];
        let p = permutation_matrix(&dims, &perm).unwrap();
        let expected = &p * &m * p.adjoint();
        let got = permute_operator(&m, &dims, &perm).unwrap();
        assert!(max_abs(&(expected - got)) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let b = identity(3).scale(1.0 / 3.0);
        let ab = kron(&a, &b);
        let got = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        assert!(max_abs(&(got - &a)) < 1e-14);
        let got_b = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(max_abs(&(got_b - b)) < 1e-14);
    }

    #[test]
    fn bad_permutation_rejected() {
        assert!(check_permutation(&[0, 0], 2).is_err());
        assert!(check_permutation(&[0, 2], 2).is_err());
    }

    #[test]
    fn vec_roundtrip() {
        let m = ComplexMatrix::from_fn(2, 3, |r, k| c(r as f64, k as f64));
        assert_eq!(unvec_rows(&vec_rows(&m), 2, 3), m);
        assert_eq!(vec_rows(&m)[1], c(0.0, 1.0));
    }
}

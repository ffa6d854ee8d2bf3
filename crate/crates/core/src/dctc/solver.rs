//! Fixed points of channels and the maximal-entropy fixed state.

use nalgebra::DMatrix;

use crate::channel::QChannel;
use crate::error::{CtcError, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::state::{self, entropy_of_spectrum, DensityMatrix};

/// Residual (trace distance to the image) accepted for the lazy limit.
pub const LAZY_RESIDUAL: f64 = 1e-11;
/// Number of squarings of the lazy map; `2^20` is about a million steps.
pub const MAX_SQUARINGS: u32 = 20;
/// Residual required of a solver output.
pub const FIXED_POINT_TOL: f64 = 1e-8;

const SUPPORT_EPS: f64 = 1e-10;
const DIRECTION_EPS: f64 = 1e-8;
const RANGE_EPS: f64 = 1e-8;

/// Result of the lazy iteration `ρ ↦ (ρ + T(ρ)) / 2` started at `I/c`.
#[derive(Debug, Clone)]
pub struct LazyFixedPoint {
    pub state: DensityMatrix,
    /// Limit of the lazy map, a projector onto the fixed operators of `T`.
    pub projector: ComplexMatrix,
    /// Number of lazy steps the limit stands for.
    pub iterations: u64,
    pub residual: f64,
}

/// The fixed states of a channel: `anchor + Σ xᵢ directionsᵢ` where positive.
#[derive(Debug, Clone)]
pub struct FixedPointSpace {
    pub dim: usize,
    pub anchor: DensityMatrix,
    pub directions: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    /// Newton iterations of the entropy ascent.
    pub iterations: u64,
    /// Lazy-map steps represented by the projector.
    pub lazy_iterations: u64,
    /// Trace distance between the result and its image.
    pub residual: f64,
    /// Entropy of the result in bits.
    pub entropy: f64,
    /// The smallest eigenvalue on the anchor support fell below `1e-8`.
    pub boundary: bool,
    /// The iteration cap was reached before convergence.
    pub capped: bool,
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub state: DensityMatrix,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iterations: u64,
    pub gradient_tol: f64,
    pub entropy_tol: f64,
    /// Fixed state to start the ascent from instead of the anchor.
    pub start: Option<DensityMatrix>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, gradient_tol: 1e-9, entropy_tol: 1e-12, start: None }
    }
}

fn check_square_cptp(t: &QChannel) -> Result<()> {
    if t.in_dims() != t.out_dims() {
        return Err(CtcError::DimensionMismatch(format!(
            "fixed points need a channel from a system to itself, got {:?} -> {:?}",
            t.in_dims(),
            t.out_dims()
        )));
    }
    if !t.is_cptp(1e-9) {
        return Err(CtcError::InvalidChannel(format!(
            "fixed points need a trace-preserving channel (defect {:e})",
            t.tp_defect()
        )));
    }
    Ok(())
}

/// Limit of the lazy iteration from `I/c`, computed by repeated squaring of
/// `(I + S) / 2`. The result has maximal support among fixed states.
pub fn lazy_fixed_point_full(t: &QChannel) -> Result<LazyFixedPoint> {
    check_square_cptp(t)?;
    let d = t.in_dim();
    let s = t.as_supermatrix().matrix;
    let mut p = (linalg::identity(d * d) + s) * c(0.5, 0.0);
    let start = linalg::vec_rows(&linalg::identity(d).scale(1.0 / d as f64));
    let mut last_residual = f64::INFINITY;
    for k in 1..=MAX_SQUARINGS {
        let q = &p * &p;
        let scale = linalg::max_abs(&q).max(1.0);
        // Rounding roughly doubles with each squaring.
        let idem_tol = 1e-12f64.max(4.0 * f64::EPSILON * (1u64 << k) as f64);
        let idempotent = linalg::max_abs(&(&q - &p)) <= idem_tol * scale;
        p = q;
        let rho = anchor_from(&p, &start, t)?;
        let residual = state::trace_distance(&rho, &t.apply(&rho)?)?;
        last_residual = residual;
        if idempotent && residual <= LAZY_RESIDUAL {
            return Ok(LazyFixedPoint { state: rho, projector: p, iterations: 1u64 << k, residual });
        }
    }
    Err(CtcError::NonConvergence { iterations: 1u64 << MAX_SQUARINGS, residual: last_residual })
}

fn anchor_from(p: &ComplexMatrix, start: &crate::linalg::ComplexVector, t: &QChannel) -> Result<DensityMatrix> {
    let d = t.in_dim();
    let m = linalg::unvec_rows(&(p * start), d, d);
    let m = linalg::hermitize(&m);
    // Clip rounding noise below zero before validation.
    let clipped = linalg::hermitian_function(&m, |l| l.max(0.0));
    DensityMatrix::from_computed(t.in_dims().to_vec(), clipped)
}

pub fn lazy_fixed_point(t: &QChannel) -> Result<DensityMatrix> {
    Ok(lazy_fixed_point_full(t)?.state)
}

/// Anchor plus an orthonormal basis of the traceless Hermitian fixed operators.
pub fn fixed_point_space(t: &QChannel) -> Result<FixedPointSpace> {
    let lazy = lazy_fixed_point_full(t)?;
    Ok(space_from_lazy(t, &lazy))
}

fn space_from_lazy(t: &QChannel, lazy: &LazyFixedPoint) -> FixedPointSpace {
    let d = t.in_dim();
    let anchor = lazy.state.clone();
    let support = support_projector(anchor.matrix());
    let mut candidates = Vec::new();
    for col in linalg::column_space(&lazy.projector, RANGE_EPS) {
        let x = linalg::unvec_rows(&col, d, d);
        let re = (&x + x.adjoint()) * c(0.5, 0.0);
        let im = (&x - x.adjoint()) * c(0.0, -0.5);
        candidates.push(re);
        candidates.push(im);
    }
    let mut directions: Vec<ComplexMatrix> = Vec::new();
    for h in candidates {
        let tr = linalg::trace(&h).re;
        let mut v = &support * (h - anchor.matrix() * c(tr, 0.0)) * &support;
        v = linalg::hermitize(&v);
        for b in &directions {
            let overlap = linalg::hs_inner(b, &v);
            v -= b * c(overlap, 0.0);
        }
        let n = linalg::hs_inner(&v, &v).sqrt();
        if n > DIRECTION_EPS {
            directions.push(v.unscale(n));
        }
    }
    FixedPointSpace { dim: d, anchor, directions }
}

fn support_projector(m: &ComplexMatrix) -> ComplexMatrix {
    linalg::hermitian_function(m, |l| if l > SUPPORT_EPS { 1.0 } else { 0.0 })
}

/// The unique fixed state of maximal entropy.
pub fn max_entropy_fixed_point(t: &QChannel) -> Result<DensityMatrix> {
    Ok(solve_max_entropy(t, &SolverOptions::default())?.state)
}

/// Maximizes the entropy over the fixed states with a damped Newton ascent in
/// the coordinates of [`FixedPointSpace`], restricted to the anchor support.
pub fn solve_max_entropy(t: &QChannel, opts: &SolverOptions) -> Result<FixedPointSolution> {
    let lazy = lazy_fixed_point_full(t)?;
    let space = space_from_lazy(t, &lazy);
    let d = space.dim;

    let (vals, vecs) = linalg::eigh(space.anchor.matrix());
    let cols: Vec<usize> = (0..d).filter(|&k| vals[k] > SUPPORT_EPS).collect();
    let v = ComplexMatrix::from_fn(d, cols.len(), |i, j| vecs[(i, cols[j])]);
    let compress = |m: &ComplexMatrix| linalg::hermitize(&(v.adjoint() * m * &v));
    let a = compress(space.anchor.matrix());
    let dirs: Vec<ComplexMatrix> = space.directions.iter().map(compress).collect();
    let n = dirs.len();
    let point = |x: &[f64]| {
        let mut m = a.clone();
        for (xi, di) in x.iter().zip(&dirs) {
            m += di * c(*xi, 0.0);
        }
        m
    };

    let mut x = vec![0.0; n];
    if let Some(start) = &opts.start {
        if start.dims() != t.in_dims() {
            return Err(CtcError::DimensionMismatch("solver start state".into()));
        }
        let delta = start.matrix() - space.anchor.matrix();
        let mut y: Vec<f64> = space.directions.iter().map(|b| linalg::hs_inner(b, &delta)).collect();
        for _ in 0..60 {
            if linalg::eigvalsh(&point(&y))[0] > 1e-12 {
                break;
            }
            y.iter_mut().for_each(|yi| *yi *= 0.5);
        }
        x = y;
    }

    let mut rho = point(&x);
    let mut eig = linalg::eigh(&rho);
    let mut entropy = entropy_of_spectrum(&eig.0);
    let mut iterations = 0u64;
    let mut capped = false;
    loop {
        if n == 0 {
            break;
        }
        if iterations >= opts.max_iterations {
            capped = true;
            break;
        }
        iterations += 1;
        let (grad, neg_hess) = derivatives(&eig, &dirs);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= opts.gradient_tol {
            break;
        }
        let step = newton_step(&neg_hess, &grad);
        let mut t_step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t_step * si).collect();
            let m = point(&trial);
            let e = linalg::eigh(&m);
            if e.0[0] >= 1e-12 {
                let s = entropy_of_spectrum(&e.0);
                if s >= entropy - 1e-15 {
                    accepted = Some((trial, m, e, s));
                    break;
                }
            }
            t_step *= 0.5;
        }
        let Some((trial, m, e, s)) = accepted else { break };
        let change = s - entropy;
        x = trial;
        rho = m;
        eig = e;
        entropy = s;
        if change.abs() <= opts.entropy_tol {
            break;
        }
    }

    let full = &v * &rho * v.adjoint();
    let state = DensityMatrix::from_computed(t.in_dims().to_vec(), full)?;
    let residual = state::trace_distance(&state, &t.apply(&state)?)?;
    let diagnostics = SolverDiagnostics {
        iterations,
        lazy_iterations: lazy.iterations,
        residual,
        entropy: state.entropy(),
        boundary: eig.0.first().is_some_and(|&l| l < 1e-8),
        capped,
    };
    if residual > FIXED_POINT_TOL {
        return Err(CtcError::NonConvergence { iterations, residual });
    }
    Ok(FixedPointSolution { state, diagnostics })
}

/// Gradient `gᵢ = −Tr[Dᵢ log₂ ρ]` and the negated Hessian
/// `Hᵢⱼ = Tr[Dᵢ L(Dⱼ)] / ln 2`, where `L` is the derivative of `ln` at `ρ`.
fn derivatives(eig: &(Vec<f64>, ComplexMatrix), dirs: &[ComplexMatrix]) -> (Vec<f64>, DMatrix<f64>) {
    let (vals, vecs) = eig;
    let r = vals.len();
    let ln2 = std::f64::consts::LN_2;
    let logs = crate::linalg::ComplexVector::from_iterator(r, vals.iter().map(|&l| c(l.max(1e-300).log2(), 0.0)));
    let log_rho = vecs * ComplexMatrix::from_diagonal(&logs) * vecs.adjoint();
    let grad: Vec<f64> = dirs.iter().map(|dm| -linalg::hs_inner(dm, &log_rho)).collect();
    let divided = DMatrix::from_fn(r, r, |a, b| {
        let (x, y) = (vals[a].max(1e-300), vals[b].max(1e-300));
        if (x - y).abs() <= 1e-12 * x.max(y) {
            2.0 / (x + y)
        } else {
            (x.ln() - y.ln()) / (x - y)
        }
    });
    let rotated: Vec<ComplexMatrix> = dirs.iter().map(|dm| vecs.adjoint() * dm * vecs).collect();
    let n = dirs.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for a in 0..r {
                for b in 0..r {
                    acc += (rotated[i][(b, a)] * rotated[j][(a, b)]).re * divided[(a, b)];
                }
            }
            h[(i, j)] = acc / ln2;
            h[(j, i)] = acc / ln2;
        }
    }
    (grad, h)
}

fn newton_step(neg_hess: &DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
    let g = nalgebra::DVector::from_column_slice(grad);
    match neg_hess.clone().cholesky() {
        Some(ch) => ch.solve(&g).iter().copied().collect(),
        None => grad.to_vec(),
    }
}

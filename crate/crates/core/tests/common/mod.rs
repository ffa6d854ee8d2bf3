//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use ctc_core::graphs::{eval_diagram_with, CausalSet, Diagram, EvalOptions, FramedCausalGraph};
use ctc_core::linalg::{self, c, ComplexMatrix};
use ctc_core::random::{self, random_channel};
use ctc_core::{DensityMatrix, Model, PctcOutcome, QChannel};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    random::rng(seed)
}

/// Orthonormal basis of the kernel of `a`, from the eigenvectors of `a† a`
/// with negligible eigenvalue. Each vector is checked against `a` directly.
fn kernel(a: &ComplexMatrix, tol: f64) -> Vec<DVector<num_complex::Complex64>> {
    let (vals, vecs) = linalg::eigh(&(a.adjoint() * a));
    let mut out = Vec::new();
    for (k, &l) in vals.iter().enumerate() {
        if l < tol * tol {
            let v = vecs.column(k).into_owned();
            assert!((a * &v).norm() < tol, "kernel vector is not annihilated");
            out.push(v);
        }
    }
    out
}

/// The ergodic projection of a channel, `N (M† N)⁻¹ M†` with `N` and `M` the
/// right and left eigenvectors for eigenvalue 1. Built from null spaces of
/// `S − I`, independently of the library's solver.
pub fn ergodic_projection(t: &QChannel) -> ComplexMatrix {
    let s = t.as_supermatrix().matrix;
    let n = s.nrows();
    let a = &s - ComplexMatrix::identity(n, n);
    let right = kernel(&a, 1e-6);
    let left = kernel(&a.adjoint(), 1e-6);
    assert_eq!(right.len(), left.len(), "eigenvalue 1 must be semisimple");
    let nm = ComplexMatrix::from_columns(&right);
    let mm = ComplexMatrix::from_columns(&left);
    let gram = mm.adjoint() * &nm;
    let inv = gram.try_inverse().expect("biorthogonal pairing is invertible");
    nm * inv * mm.adjoint()
}

pub fn project(p: &ComplexMatrix, rho: &DensityMatrix) -> ComplexMatrix {
    let d = rho.dim();
    linalg::unvec_rows(&(p * linalg::vec_rows(rho.matrix())), d, d)
}

/// Best entropy found among projections of many states onto the fixed set.
pub fn sampled_max_entropy(t: &QChannel, samples: usize, seed: u64) -> f64 {
    let p = ergodic_projection(t);
    let d = t.in_dim();
    let mut r = rng(seed);
    let mut states = vec![DensityMatrix::maximally_mixed(vec![d])];
    for _ in 0..samples {
        states.push(random::random_pure_state(&mut r, vec![d]));
        states.push(random::random_density(&mut r, vec![d]));
    }
    let mut best = f64::NEG_INFINITY;
    for s in &states {
        let m = linalg::hermitize(&project(&p, s));
        let vals = linalg::eigvalsh(&m);
        let h: f64 = vals.iter().filter(|&&v| v > 1e-15).map(|&v| -v * v.log2()).sum();
        best = best.max(h);
    }
    best
}

/// Channels with degenerate fixed sets as well as generic ones.
pub fn structured_channel(d: usize, kind: usize, seed: u64) -> QChannel {
    let mut r = rng(seed);
    let v = random::random_unitary(&mut r, d);
    let rotate = |k: ComplexMatrix| &v * k * v.adjoint();
    match kind % 5 {
        0 => random_channel(vec![d], vec![d], seed),
        1 => QChannel::from_unitary(random::random_unitary(&mut r, d), vec![d]).unwrap(),
        2 => {
            // Classical chain in a random basis with absorbing states.
            let absorbing = r.random_range(1..d);
            let mut kraus = Vec::new();
            for j in 0..d {
                if j < absorbing {
                    kraus.push(rotate(linalg::unit(d, j, j)));
                    continue;
                }
                let w: Vec<f64> = (0..d).map(|_| r.random::<f64>() + 0.05).collect();
                let total: f64 = w.iter().sum();
                for (i, wi) in w.iter().enumerate() {
                    kraus.push(rotate(linalg::unit(d, i, j) * c((wi / total).sqrt(), 0.0)));
                }
            }
            QChannel::new_cptp(kraus, vec![d], vec![d]).unwrap()
        }
        3 => {
            let kraus = (0..d).map(|i| rotate(linalg::unit(d, i, i))).collect();
            QChannel::new_cptp(kraus, vec![d], vec![d]).unwrap()
        }
        _ => {
            // Two blocks, each with its own channel.
            let split = r.random_range(1..d);
            let mut kraus = Vec::new();
            for (lo, hi) in [(0, split), (split, d)] {
                let n = hi - lo;
                let inner = random_channel(vec![n], vec![n], r.random());
                for k in inner.kraus() {
                    let mut big = ComplexMatrix::zeros(d, d);
                    big.view_mut((lo, lo), (n, n)).copy_from(k);
                    kraus.push(rotate(big));
                }
            }
            QChannel::new_cptp(kraus, vec![d], vec![d]).unwrap()
        }
    }
}

/// A random loop-local diagram: a qubit wire through one or two loops, each
/// loop with zero to two single-system nodes, and sometimes a second qubit
/// wire running alongside.
pub fn random_cv_local_diagram(seed: u64) -> Diagram {
    let mut r = rng(seed);
    let mut names: Vec<String> = vec!["in0".into()];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut alpha: Vec<Vec<usize>> = Vec::new();
    let mut channels: Vec<(usize, QChannel)> = Vec::new();
    let mut in_order = Vec::new();
    let mut out_order = Vec::new();
    let add = |names: &mut Vec<String>, n: String| {
        names.push(n);
        names.len() - 1
    };
    let mut prev = 0usize;
    let loops = r.random_range(1..=2);
    for l in 0..loops {
        if r.random_bool(0.5) {
            let p = add(&mut names, format!("pre{l}"));
            edges.push((prev, p));
            alpha.push(vec![2]);
            channels.push((p, random_channel(vec![2], vec![2], r.random())));
            prev = p;
        }
        let dc = r.random_range(2..=3);
        let v = add(&mut names, format!("v{l}"));
        let cr_in = edges.len();
        edges.push((prev, v));
        alpha.push(vec![2]);
        channels.push((v, random_channel(vec![2, dc], vec![2, dc], r.random())));
        let chain = r.random_range(0..=2);
        let mut last = v;
        let mut loop_out = None;
        for j in 0..chain {
            let cnode = add(&mut names, format!("c{l}_{j}"));
            if loop_out.is_none() {
                loop_out = Some(edges.len());
            }
            edges.push((last, cnode));
            alpha.push(vec![dc]);
            channels.push((cnode, random_channel(vec![dc], vec![dc], r.random())));
            last = cnode;
        }
        let loop_in = edges.len();
        edges.push((last, v));
        alpha.push(vec![dc]);
        let loop_out = loop_out.unwrap_or(loop_in);
        in_order.push((v, vec![cr_in, loop_in]));
        // The CR output edge is only known once the next node exists.
        out_order.push((v, vec![usize::MAX, loop_out]));
        prev = v;
    }
    let out0 = add(&mut names, "out0".into());
    edges.push((prev, out0));
    alpha.push(vec![2]);
    let mut inputs = vec![0];
    let mut outputs = vec![out0];
    if r.random_bool(0.5) {
        let i1 = add(&mut names, "in1".into());
        let x = add(&mut names, "side".into());
        let o1 = add(&mut names, "out1".into());
        edges.push((i1, x));
        edges.push((x, o1));
        alpha.push(vec![3]);
        alpha.push(vec![2]);
        channels.push((x, random_channel(vec![3], vec![2], r.random())));
        inputs.push(i1);
        outputs.push(o1);
    }
    for (v, order) in &mut out_order {
        let loop_out = order[1];
        order[0] = (0..edges.len()).find(|&e| edges[e].0 == *v && e != loop_out).expect("interaction has a CR output");
    }
    let graph =
        FramedCausalGraph::new(names, edges, inputs, outputs).unwrap().with_framing(in_order, out_order).unwrap();
    let mut beta = vec![None; graph.node_count()];
    for (v, ch) in channels {
        beta[v] = Some(ch);
    }
    Diagram::new(graph, alpha, beta).unwrap()
}

/// Probe states on `dims` with an ancilla of equal dimension.
pub fn probes_with_ancilla(dims: &[usize], count: usize, seed: u64) -> Vec<DensityMatrix> {
    let d: usize = dims.iter().product();
    let mut full = dims.to_vec();
    full.push(d);
    let mut out = vec![DensityMatrix::new(full.clone(), DensityMatrix::maximally_entangled(d).into_matrix()).unwrap()];
    let mut r = rng(seed);
    for _ in 0..count {
        out.push(random::random_pure_state(&mut r, full.clone()));
    }
    out
}

/// Largest output difference between two cut plans of the same diagram.
pub fn plan_deviation(d: &Diagram, model: Model, a: &[usize], b: &[usize], probes: &[DensityMatrix]) -> f64 {
    let ea =
        eval_diagram_with(d, model, &EvalOptions { cut_plan: Some(a.to_vec()), experimental_trace: false }).unwrap();
    let eb =
        eval_diagram_with(d, model, &EvalOptions { cut_plan: Some(b.to_vec()), experimental_trace: false }).unwrap();
    let mut worst = 0.0f64;
    for p in probes {
        let dev = match (ea.apply(p).unwrap(), eb.apply(p).unwrap()) {
            (PctcOutcome::State { state: x, .. }, PctcOutcome::State { state: y, .. }) => {
                ctc_core::trace_distance(&x, &y).unwrap()
            }
            (PctcOutcome::NonNormalizable { .. }, PctcOutcome::NonNormalizable { .. }) => 0.0,
            _ => 1.0,
        };
        worst = worst.max(dev);
    }
    worst
}

/// A random partial order on at most `max` elements with shuffled labels.
pub fn random_poset(seed: u64, max: usize) -> CausalSet {
    let mut r = rng(seed);
    let n = r.random_range(1..=max);
    let p = r.random_range(0.1..0.6);
    let mut leq = vec![vec![false; n]; n];
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
        for cell in &mut row[i + 1..] {
            *cell = r.random_bool(p);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq[i][k] && leq[k][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut r);
    let mut shuffled = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            shuffled[labels[i]][labels[j]] = leq[i][j];
        }
    }
    CausalSet::new(shuffled).unwrap()
}

//! Seeded sampling of channels and states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::QChannel;
use crate::error::{CtcError, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomChannelSpec {
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub kraus_rank: usize,
    pub seed: u64,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of sub-stream `index` from a master seed (splitmix64).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Columns of a Gaussian matrix orthonormalized by a thin QR decomposition.
fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, rows, cols);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix the phases of R's diagonal so the distribution is Haar.
    let mut q = q;
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}

/// Stinespring sampling: a random isometry from the input into
/// `output ⊗ environment` split into `kraus_rank` blocks.
pub fn random_cptp(spec: &RandomChannelSpec) -> Result<QChannel> {
    if spec.kraus_rank == 0 {
        return Err(CtcError::InvalidChannel("kraus_rank must be at least 1".into()));
    }
    let din = linalg::product(&spec.in_dims);
    let dout = linalg::product(&spec.out_dims);
    if spec.kraus_rank * dout < din {
        return Err(CtcError::InvalidChannel(format!(
            "kraus_rank {} too small for a {din} -> {dout} isometry",
            spec.kraus_rank
        )));
    }
    let mut r = rng(spec.seed);
    let v = random_isometry(&mut r, spec.kraus_rank * dout, din);
    let kraus = (0..spec.kraus_rank).map(|k| v.rows(k * dout, dout).into_owned()).collect();
    QChannel::new_cptp(kraus, spec.in_dims.clone(), spec.out_dims.clone())
}

/// A random channel whose rank is large enough for any dimensions.
pub fn random_channel(in_dims: Vec<usize>, out_dims: Vec<usize>, seed: u64) -> QChannel {
    let din = linalg::product(&in_dims);
    let dout = linalg::product(&out_dims);
    let kraus_rank = din.div_ceil(dout).max(2);
    random_cptp(&RandomChannelSpec { in_dims, out_dims, kraus_rank, seed }).expect("rank covers the input")
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    random_isometry(rng, d, d)
}

pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexVector {
    let g = gaussian_matrix(rng, d, 1);
    let n = g.norm();
    ComplexVector::from_column_slice(g.unscale(n).as_slice())
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> DensityMatrix {
    let d = linalg::product(&dims);
    DensityMatrix::from_pure(dims, &random_pure_vector(rng, d)).expect("unit vector")
}

/// Mixed state `G G† / Tr` with a square Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> DensityMatrix {
    let d = linalg::product(&dims);
    let g = gaussian_matrix(rng, d, d);
    DensityMatrix::from_computed(dims, &g * g.adjoint()).expect("Gram matrix is a state")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_unitary() {
        let ch =
            random_cptp(&RandomChannelSpec { in_dims: vec![3], out_dims: vec![3], kraus_rank: 1, seed: 4 }).unwrap();
        let u = &ch.kraus()[0];
        assert!(linalg::max_abs(&(u * u.adjoint() - linalg::identity(3))) < 1e-12);
    }

    #[test]
    fn same_seed_same_channel() {
        let spec = RandomChannelSpec { in_dims: vec![2], out_dims: vec![2, 2], kraus_rank: 3, seed: 11 };
        let a = random_cptp(&spec).unwrap();
        let b = random_cptp(&spec).unwrap();
        assert_eq!(a.kraus(), b.kraus());
    }

    #[test]
    fn cptp_for_many_seeds() {
        for seed in 0..1000 {
            let spec = RandomChannelSpec { in_dims: vec![2], out_dims: vec![3], kraus_rank: 2, seed };
            assert!(random_cptp(&spec).unwrap().is_cptp(1e-9), "seed {seed}");
        }
    }

    #[test]
    fn split_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..100).map(|i| split_seed(7, i)).collect();
        assert_eq!(seeds.len(), 100);
    }

    #[test]
    fn rank_zero_rejected() {
        let spec = RandomChannelSpec { in_dims: vec![2], out_dims: vec![2], kraus_rank: 0, seed: 0 };
        assert!(random_cptp(&spec).is_err());
    }
}

//! Named gates and the spider generators they are built from.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::channel::QChannel;
use crate::error::{CtcError, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};
use crate::state::DensityMatrix;

/// A gate in the fixed vocabulary accepted by [`make_gate`].
#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec {
    Identity(usize),
    Cnot,
    Swap,
    Cswap,
    Hadamard,
    PauliX,
    PauliY,
    PauliZ,
    /// `|a, b> -> |a, a + b mod d>` on `[d, d]`.
    AddMod(usize),
    ZSpider {
        n_in: usize,
        n_out: usize,
        phase: f64,
    },
    XSpider {
        n_in: usize,
        n_out: usize,
        phase: f64,
    },
    DephaseZ(usize),
    Discard(usize),
    Prepare(DensityMatrix),
    SicPovmQubit,
}

impl GateSpec {
    /// Looks up a gate by name with numeric parameters. `prepare` needs a
    /// state and is only available through the enum.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(CtcError::InvalidArity {
                    gate: name.to_string(),
                    detail: format!("expected {n} parameters, got {}", params.len()),
                });
            }
            Ok(())
        };
        let count = |x: f64| -> Result<usize> {
            if x < 0.0 || x.fract() != 0.0 || x > 16.0 {
                return Err(CtcError::InvalidArity {
                    gate: name.to_string(),
                    detail: format!("{x} is not a valid count"),
                });
            }
            Ok(x as usize)
        };
        let dim = |x: f64| -> Result<usize> {
            let d = count(x)?;
            if d == 0 {
                return Err(CtcError::InvalidArity { gate: name.to_string(), detail: "dimension 0".into() });
            }
            Ok(d)
        };
        Ok(match name {
            "identity" => {
                want(1)?;
                Self::Identity(dim(params[0])?)
            }
            "cnot" => {
                want(0)?;
                Self::Cnot
            }
            "swap" => {
                want(0)?;
                Self::Swap
            }
            "cswap" => {
                want(0)?;
                Self::Cswap
            }
            "hadamard" => {
                want(0)?;
                Self::Hadamard
            }
            "pauli_x" => {
                want(0)?;
                Self::PauliX
            }
            "pauli_y" => {
                want(0)?;
                Self::PauliY
            }
            "pauli_z" => {
                want(0)?;
                Self::PauliZ
            }
            "add_mod" => {
                want(1)?;
                Self::AddMod(dim(params[0])?)
            }
            "z_spider" | "x_spider" => {
                if params.len() != 2 && params.len() != 3 {
                    return Err(CtcError::InvalidArity {
                        gate: name.to_string(),
                        detail: format!("expected n_in, n_out and an optional phase, got {} parameters", params.len()),
                    });
                }
                let n_in = count(params[0])?;
                let n_out = count(params[1])?;
                let phase = params.get(2).copied().unwrap_or(0.0);
                if name == "z_spider" {
                    Self::ZSpider { n_in, n_out, phase }
                } else {
                    Self::XSpider { n_in, n_out, phase }
                }
            }
            "dephase_z" => {
                want(1)?;
                Self::DephaseZ(dim(params[0])?)
            }
            "discard" => {
                want(1)?;
                Self::Discard(dim(params[0])?)
            }
            "sic_povm_qubit" => {
                want(0)?;
                Self::SicPovmQubit
            }
            "prepare" => {
                return Err(CtcError::InvalidArity {
                    gate: name.to_string(),
                    detail: "prepare takes a state, not numeric parameters".into(),
                })
            }
            other => return Err(CtcError::UnknownGate(other.to_string())),
        })
    }
}

pub fn make_gate(spec: &GateSpec) -> Result<QChannel> {
    match spec {
        GateSpec::Identity(d) => Ok(QChannel::identity(vec![*d])),
        GateSpec::Cnot => unitary(cnot(), vec![2, 2]),
        GateSpec::Swap => QChannel::permutation(&[2, 2], &[1, 0]),
        GateSpec::Cswap => unitary(cswap(), vec![2, 2, 2]),
        GateSpec::Hadamard => unitary(hadamard(), vec![2]),
        GateSpec::PauliX => unitary(pauli_x(), vec![2]),
        GateSpec::PauliY => unitary(pauli_y(), vec![2]),
        GateSpec::PauliZ => unitary(pauli_z(), vec![2]),
        GateSpec::AddMod(d) => unitary(add_mod(*d), vec![*d, *d]),
        GateSpec::ZSpider { n_in, n_out, phase } => spider_channel(z_spider(*n_in, *n_out, *phase), *n_in, *n_out),
        GateSpec::XSpider { n_in, n_out, phase } => spider_channel(x_spider(*n_in, *n_out, *phase), *n_in, *n_out),
        GateSpec::DephaseZ(d) => {
            QChannel::new_cptp((0..*d).map(|i| linalg::unit(*d, i, i)).collect(), vec![*d], vec![*d])
        }
        GateSpec::Discard(d) => Ok(QChannel::discard(vec![*d])),
        GateSpec::Prepare(rho) => Ok(QChannel::prepare(rho)),
        GateSpec::SicPovmQubit => sic_povm_qubit(),
    }
}

fn unitary(u: ComplexMatrix, dims: Vec<usize>) -> Result<QChannel> {
    QChannel::from_unitary(u, dims)
}

fn spider_channel(m: ComplexMatrix, n_in: usize, n_out: usize) -> Result<QChannel> {
    QChannel::new(vec![m], vec![2; n_in], vec![2; n_out])
}

fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn pauli_x() -> ComplexMatrix {
    real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> ComplexMatrix {
    real(2, 2, &[1.0, 1.0, 1.0, -1.0]).scale(FRAC_1_SQRT_2)
}

/// Control on the first qubit.
pub fn cnot() -> ComplexMatrix {
    add_mod(2)
}

/// Control on the first qubit, swapping the other two.
pub fn cswap() -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(8, 8);
    for i in 0..8 {
        let j = if i & 4 != 0 { (i & 4) | ((i & 1) << 1) | ((i & 2) >> 1) } else { i };
        u[(j, i)] = c(1.0, 0.0);
    }
    u
}

pub fn add_mod(d: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            u[(a * d + (a + b) % d, a * d + b)] = c(1.0, 0.0);
        }
    }
    u
}

/// `|0…0><0…0| + e^{iα} |1…1><1…1|` from `n_in` to `n_out` qubits.
pub fn z_spider(n_in: usize, n_out: usize, phase: f64) -> ComplexMatrix {
    let rows = 1 << n_out;
    let cols = 1 << n_in;
    let mut m = ComplexMatrix::zeros(rows, cols);
    m[(0, 0)] += c(1.0, 0.0);
    m[(rows - 1, cols - 1)] += c(phase.cos(), phase.sin());
    m
}

/// `√2^(n_in + n_out − 2) (|+…+><+…+| + e^{iα} |−…−><−…−|)`.
///
/// The scalar makes the two-to-one X spider the classical XOR map, so a
/// CNOT is a Z copy followed by an X merge with no leftover factor.
pub fn x_spider(n_in: usize, n_out: usize, phase: f64) -> ComplexMatrix {
    let plus = ComplexVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    let minus = ComplexVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]);
    let power = |v: &ComplexVector, n: usize| {
        (0..n).fold(ComplexVector::from_element(1, c(1.0, 0.0)), |acc, _| acc.kronecker(v))
    };
    let pp = power(&plus, n_out) * power(&plus, n_in).adjoint();
    let mm = power(&minus, n_out) * power(&minus, n_in).adjoint();
    let scalar = 2f64.sqrt().powi(n_in as i32 + n_out as i32 - 2);
    (pp + mm * c(phase.cos(), phase.sin())).scale(scalar)
}

/// Bloch vectors of the tetrahedral qubit SIC-POVM.
pub fn sic_bloch_vectors() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// Pure state with Bloch vector `n`.
pub fn bloch_ket(n: [f64; 3]) -> ComplexVector {
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    ComplexVector::from_vec(vec![c((theta / 2.0).cos(), 0.0), c(phi.cos(), phi.sin()) * (theta / 2.0).sin()])
}

/// Measures the tetrahedral SIC-POVM and records the outcome on a 4-level
/// register: `ρ ↦ Σ_x Tr[M_x ρ] |x><x|` with `M_x = |ψ_x><ψ_x| / 2`.
fn sic_povm_qubit() -> Result<QChannel> {
    let kraus = sic_bloch_vectors()
        .iter()
        .enumerate()
        .map(|(x, &n)| (linalg::ket(4, x) * bloch_ket(n).adjoint()).scale(FRAC_1_SQRT_2))
        .collect();
    QChannel::new_cptp(kraus, vec![2], vec![4])
}

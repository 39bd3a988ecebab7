//! Dense single-rank reference simulator.
//!
//! Every gate is expanded to its full `2^m x 2^m` matrix over its operand
//! list and applied by gathering each `2^m`-amplitude group of the full
//! vector. None of the kernel or engine code is used, so agreement between
//! the two is meaningful.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_traits::Float;

use crate::measure::{Pauli, PauliTerm};
use crate::{Circuit, Error, Gate, Result, C64};

pub const MAX_ORACLE_QUBITS: usize = 20;
pub const MAX_EXPVAL_QUBITS: usize = 14;

const O: C64 = C64::new(0.0, 0.0);
const L: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn guard(n_qubits: usize, limit: usize, what: &'static str) -> Result<()> {
    if n_qubits > limit {
        Err(Error::TooLarge {
            what,
            n_qubits,
            limit,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_qubits: usize,
    amps: Vec<C64>,
}

/// Operand list and row-major matrix; bit `j` of a row or column index is
/// the value of `qubits[j]`.
fn full_matrix(gate: &Gate) -> (Vec<usize>, Vec<C64>) {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let phase = |theta: f64| C64::new(Float::cos(theta), Float::sin(theta));
    let one = |q: usize, m: [C64; 4]| (vec![q], m.to_vec());
    let controlled = |c: usize, t: usize, u: [C64; 4]| {
        // qubits [c, t]: index = c + 2 t
        let mut m = vec![O; 16];
        m[0] = L;
        m[2 * 4 + 2] = L;
        m[4 + 1] = u[0];
        m[4 + 3] = u[1];
        m[3 * 4 + 1] = u[2];
        m[3 * 4 + 3] = u[3];
        (vec![c, t], m)
    };
    let rk = |k: u32| phase(PI / Float::powi(2.0, k as i32 - 1));
    let u1 = |m: &crate::Unitary2| [m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)];
    match gate {
        Gate::X(q) => one(*q, [O, L, L, O]),
        Gate::Y(q) => one(*q, [O, -I, I, O]),
        Gate::Z(q) => one(*q, [L, O, O, -L]),
        Gate::H(q) => one(*q, [h, h, h, -h]),
        Gate::S(q) => one(*q, [L, O, O, I]),
        Gate::T(q) => one(*q, [L, O, O, phase(PI / 4.0)]),
        Gate::Rz { target, theta } => one(*target, [phase(-theta / 2.0), O, O, phase(theta / 2.0)]),
        Gate::Rk { target, k } => one(*target, [L, O, O, rk(*k)]),
        Gate::U1q { target, matrix } => one(*target, u1(matrix)),
        Gate::Cnot { control, target } => controlled(*control, *target, [O, L, L, O]),
        Gate::Crk { control, target, k } => controlled(*control, *target, [L, O, O, rk(*k)]),
        Gate::Cu1q {
            control,
            target,
            matrix,
        } => controlled(*control, *target, u1(matrix)),
        Gate::Swap(a, b) => {
            let mut m = vec![O; 16];
            for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[r * 4 + c] = L;
            }
            (vec![*a, *b], m)
        }
        Gate::Dense { targets, matrix } => (targets.clone(), matrix.data().to_vec()),
    }
}

impl DenseState {
    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        guard(n_qubits, MAX_ORACLE_QUBITS, "dense state")?;
        if index >> n_qubits != 0 {
            return Err(Error::BasisIndexOutOfRange { index, n_qubits });
        }
        let mut amps = vec![O; 1 << n_qubits];
        amps[index as usize] = L;
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidParameter(
                "amplitude count must be a power of two",
            ));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        guard(n_qubits, MAX_ORACLE_QUBITS, "dense state")?;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let (qubits, m) = full_matrix(gate);
        let dim = 1usize << qubits.len();
        let spread = |k: usize| -> usize {
            (0..qubits.len())
                .filter(|j| k >> j & 1 == 1)
                .map(|j| 1usize << qubits[j])
                .sum()
        };
        let offsets: Vec<usize> = (0..dim).map(spread).collect();
        let mask = spread(dim - 1);
        let mut group = vec![O; dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for k in 0..dim {
                group[k] = self.amps[base + offsets[k]];
            }
            for r in 0..dim {
                self.amps[base + offsets[r]] = (0..dim).map(|c| m[r * dim + c] * group[c]).sum();
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::WidthMismatch {
                circuit: circuit.n_qubits(),
                state: self.n_qubits,
            });
        }
        circuit.gates().iter().try_for_each(|g| self.apply(g))
    }

    /// Largest element-wise `|self - other|`.
    pub fn max_deviation(&self, other: &[C64]) -> f64 {
        if other.len() != self.amps.len() {
            return f64::INFINITY;
        }
        self.amps
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `a_j = 2^(-N/2) e^{2 pi i x j / 2^N}`.
pub fn dft_reference(x: u64, n_qubits: usize) -> Result<Vec<C64>> {
    guard(n_qubits, MAX_ORACLE_QUBITS, "DFT reference")?;
    if x >> n_qubits != 0 {
        return Err(Error::BasisIndexOutOfRange { index: x, n_qubits });
    }
    let dim = 1u64 << n_qubits;
    let scale = 1.0 / Float::sqrt(dim as f64);
    Ok((0..dim)
        .map(|j| {
            // reduce x*j mod 2^N first to keep the angle small
            let r = (x * j) % dim;
            C64::from_polar(scale, 2.0 * PI * r as f64 / dim as f64)
        })
        .collect())
}

/// `<psi|H|psi>` with imaginary part, applying each Pauli string directly:
/// `P|i> = phase(i) |i XOR xmask>`.
pub fn dense_expval_complex(state: &DenseState, terms: &[PauliTerm]) -> Result<C64> {
    guard(state.n_qubits, MAX_EXPVAL_QUBITS, "dense expectation")?;
    let amps = &state.amps;
    let mut total = O;
    for term in terms {
        term.validate(state.n_qubits)?;
        let mut flip = 0usize;
        for &(q, p) in term.factors() {
            if p != Pauli::Z {
                flip |= 1 << q;
            }
        }
        let mut acc = O;
        for (i, a) in amps.iter().enumerate() {
            let mut ph = L;
            for &(q, p) in term.factors() {
                let bit = i >> q & 1 == 1;
                ph *= match (p, bit) {
                    (Pauli::X, _) => L,
                    (Pauli::Y, false) => I,
                    (Pauli::Y, true) => -I,
                    (Pauli::Z, false) => L,
                    (Pauli::Z, true) => -L,
                };
            }
            acc += amps[i ^ flip].conj() * ph * a;
        }
        total += acc * term.coefficient();
    }
    Ok(total)
}

pub fn dense_expval(state: &DenseState, terms: &[PauliTerm]) -> Result<f64> {
    dense_expval_complex(state, terms).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[C64], b: &[f64]) -> bool {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - C64::new(*y, 0.0)).norm() < 1e-15)
    }

    #[test]
    fn basic_gates() {
        let mut s = DenseState::basis(1, 0).unwrap();
        s.apply(&Gate::H(0)).unwrap();
        assert!(close(s.amplitudes(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]));
        let mut s = DenseState::basis(3, 0).unwrap();
        s.apply(&Gate::X(2)).unwrap();
        assert_eq!(s.amplitudes()[4], L);
        let mut s = DenseState::basis(2, 1).unwrap();
        s.apply(&Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        assert_eq!(s.amplitudes()[3], L);
        let mut s = DenseState::basis(2, 1).unwrap();
        s.apply(&Gate::Swap(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[2], L);
    }

    #[test]
    fn dft_small_cases() {
        assert!(close(&dft_reference(0, 2).unwrap(), &[0.5, 0.5, 0.5, 0.5]));
        assert!(close(
            &dft_reference(1, 1).unwrap(),
            &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]
        ));
        assert!(dft_reference(4, 2).is_err());
    }

    #[test]
    fn pauli_expectations() {
        let one = DenseState::basis(1, 1).unwrap();
        let z = PauliTerm::new(1.0, [(0, Pauli::Z)]).unwrap();
        assert_eq!(dense_expval(&one, &[z]).unwrap(), -1.0);
        let mut plus = DenseState::basis(1, 0).unwrap();
        plus.apply(&Gate::H(0)).unwrap();
        let x = PauliTerm::new(1.0, [(0, Pauli::X)]).unwrap();
        assert!((dense_expval(&plus, &[x]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn guards() {
        assert!(DenseState::basis(21, 0).is_err());
        let s = DenseState::basis(15, 0).unwrap();
        assert!(dense_expval(&s, &[]).is_err());
    }

    #[test]
    fn random_gates_preserve_norm() {
        let mut s = DenseState::basis(5, 3).unwrap();
        let gates = [
            Gate::H(0),
            Gate::T(1),
            Gate::Cnot {
                control: 0,
                target: 4,
            },
            Gate::Rz {
                target: 3,
                theta: 0.7,
            },
            Gate::Y(2),
            Gate::Crk {
                control: 4,
                target: 1,
                k: 3,
            },
            Gate::Swap(2, 4),
            Gate::H(3),
            Gate::S(4),
            Gate::H(1),
        ];
        for _ in 0..2 {
            for g in &gates {
                s.apply(g).unwrap();
            }
        }
        assert!((s.norm_sq() - 1.0).abs() < 1e-13);
    }
}

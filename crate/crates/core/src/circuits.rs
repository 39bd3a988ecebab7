//! Builders for the benchmark circuits.

use alloc::vec::Vec;

use crate::{Circuit, Error, Gate, Result};

/// Quantum Fourier transform on `n_qubits`, qubit `N-1` most significant.
///
/// For `i = N-1 .. 0`: `H(i)`, then `CRK(k)` with control `i-k+1` onto
/// target `i` for `k = 2 ..= i+1`. With `with_swaps` a final layer of
/// `SWAP(j, N-1-j)` undoes the bit reversal, so `|x>` maps to amplitudes
/// `2^(-N/2) e^{2 pi i x j / 2^N}`.
pub fn build_qft(n_qubits: usize, with_swaps: bool) -> Result<Circuit> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("QFT needs at least one qubit"));
    }
    let mut gates = Vec::with_capacity(n_qubits * (n_qubits + 1) / 2 + n_qubits / 2);
    for i in (0..n_qubits).rev() {
        gates.push(Gate::H(i));
        for k in 2..=i + 1 {
            gates.push(Gate::Crk {
                control: i + 1 - k,
                target: i,
                k: k as u32,
            });
        }
    }
    if with_swaps {
        for j in 0..n_qubits / 2 {
            gates.push(Gate::Swap(j, n_qubits - 1 - j));
        }
    }
    Circuit::from_gates(n_qubits, gates)
}

/// How `R_k` exponents are assigned to the rotation slots of the
/// universal circuit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum KSchedule {
    /// `k = 1 + (slot mod N)`.
    #[default]
    Cyclic,
    /// One `k >= 1` per slot, `N(N+1)` entries.
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalSpec {
    pub n_qubits: usize,
    pub k_schedule: KSchedule,
}

impl UniversalSpec {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            k_schedule: KSchedule::Cyclic,
        }
    }

    pub fn rotations(&self) -> usize {
        self.n_qubits * (self.n_qubits + 1)
    }

    pub fn cnots(&self) -> usize {
        self.n_qubits * self.n_qubits.saturating_sub(1)
    }
}

/// `N + 1` layers of `R_k` on every qubit, separated by `N` chains
/// `CNOT(q, q+1)`; `2N^2` gates in total.
pub fn build_universal(spec: &UniversalSpec) -> Result<Circuit> {
    let n = spec.n_qubits;
    if n < 2 {
        return Err(Error::InvalidParameter(
            "universal circuit needs at least two qubits",
        ));
    }
    let k_of = |slot: usize| -> Result<u32> {
        match &spec.k_schedule {
            KSchedule::Cyclic => Ok(1 + (slot % n) as u32),
            KSchedule::Explicit(ks) => {
                if ks.len() != spec.rotations() {
                    return Err(Error::LengthMismatch {
                        expected: spec.rotations(),
                        got: ks.len(),
                    });
                }
                Ok(ks[slot])
            }
        }
    };
    let mut circuit = Circuit::new(n);
    let mut slot = 0;
    for layer in 0..=n {
        for q in 0..n {
            circuit.push(Gate::Rk {
                target: q,
                k: k_of(slot)?,
            })?;
            slot += 1;
        }
        if layer < n {
            for q in 0..n - 1 {
                circuit.push(Gate::Cnot {
                    control: q,
                    target: q + 1,
                })?;
            }
        }
    }
    Ok(circuit)
}

/// `H(0)` followed by the chain `CNOT(i, i+1)`.
pub fn build_ghz(n_qubits: usize) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidParameter("GHZ needs at least two qubits"));
    }
    Circuit::from_gates(
        n_qubits,
        core::iter::once(Gate::H(0)).chain((0..n_qubits - 1).map(|i| Gate::Cnot {
            control: i,
            target: i + 1,
        })),
    )
}

//! Partitioned state-vector simulation.
//!
//! A state of `N` qubits is split evenly over `2^p` ranks; each rank owns a
//! contiguous slice of `2^(N-p)` amplitudes. Qubits whose index bit falls
//! inside the slice offset are *local* and never require communication.
//! Gates on the remaining qubits are executed with a plan that depends on
//! both the operand locality and the structure of the gate: diagonal gates
//! never communicate, non-diagonal gates on a non-local target exchange the
//! whole slice with exactly one partner rank, and controlled gates use the
//! control qubit to select which ranks participate.
//!
//! The crate is `no_std` (it needs `alloc`). Message passing is abstracted
//! by [`Transport`]; concrete multi-rank backends live in the `qsim` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod circuits;
pub mod engine;
mod error;
pub mod gate;
pub mod kernels;
pub mod measure;
pub mod oracle;
pub mod topology;
pub mod transport;

pub use circuit::Circuit;
pub use engine::{plan_gate, CommPlan, DistState, Participants};
pub use error::{Error, Result};
pub use gate::{DenseUnitary, Gate, Unitary2};
pub use measure::{Pauli, PauliTerm};
pub use topology::{memory_bytes_per_rank, memory_bytes_per_rank_with_scratch, Locality, Topology};
pub use transport::{GateTraffic, Solo, StatsRecorder, Transport, TransportError, TransportStats};

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex64;

/// Tolerance used when validating user-supplied unitaries.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

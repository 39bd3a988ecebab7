//! Tape execution for host frameworks.
//!
//! A [`Device`] receives a flat list of operations (name, wires,
//! parameters) plus one measurement, runs it from `|0...0>` on the chosen
//! backend, and returns plain numbers. Every call starts from a fresh
//! state, so tapes are independent.

use qsim_core::measure::{expval_pauli_sum, probability, sample};
use qsim_core::{Circuit, DistState, Error, PauliTerm, Topology, TransportError};

use crate::format::{gate_from_parts, FormatErrorKind, SUPPORTED_GATES};
use crate::world::{run_world, Backend};

#[derive(Debug, Clone, PartialEq)]
pub struct TapeOp {
    pub name: String,
    pub wires: Vec<usize>,
    pub params: Vec<f64>,
}

impl TapeOp {
    pub fn new(
        name: impl Into<String>,
        wires: impl Into<Vec<usize>>,
        params: impl Into<Vec<f64>>,
    ) -> Self {
        Self {
            name: name.into(),
            wires: wires.into(),
            params: params.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Expval(Vec<PauliTerm>),
    Probs(Vec<usize>),
    Sample { shots: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementResult {
    Expval(f64),
    Probs(Vec<f64>),
    Samples(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("operation {index}: {kind}")]
    Operation { index: usize, kind: FormatErrorKind },
    #[error(transparent)]
    Engine(#[from] Error),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone)]
pub struct Device {
    topo: Topology,
    backend: Backend,
}

impl Device {
    /// Device over `wires` qubits split across `2^log_ranks` ranks.
    pub fn open(wires: usize, log_ranks: usize, backend: Backend) -> Result<Self, DeviceError> {
        Ok(Self {
            topo: Topology::new(wires, log_ranks, 0)?,
            backend,
        })
    }

    pub fn wires(&self) -> usize {
        self.topo.n_qubits()
    }

    pub fn log_ranks(&self) -> usize {
        self.topo.log_ranks()
    }

    pub fn supported_operations() -> &'static [&'static str] {
        SUPPORTED_GATES
    }

    pub fn compile(&self, ops: &[TapeOp]) -> Result<Circuit, DeviceError> {
        let mut circuit = Circuit::new(self.wires());
        for (index, op) in ops.iter().enumerate() {
            let gate = gate_from_parts(&op.name, &op.wires, &op.params)
                .and_then(|g| circuit.push(g).map_err(FormatErrorKind::from))
                .map_err(|kind| DeviceError::Operation { index, kind });
            gate?;
        }
        Ok(circuit)
    }

    /// Runs `ops` from `|0...0>` and evaluates `measurement`.
    pub fn run_tape(
        &self,
        ops: &[TapeOp],
        measurement: &Measurement,
    ) -> Result<MeasurementResult, DeviceError> {
        let circuit = self.compile(ops)?;
        let out = run_world(self.backend, self.log_ranks(), |ep| {
            let mut state = DistState::basis(self.wires(), ep, 0)?;
            state.apply_circuit(&circuit)?;
            Ok::<_, Error>(match measurement {
                Measurement::Expval(terms) => {
                    MeasurementResult::Expval(expval_pauli_sum(&mut state, terms)?)
                }
                Measurement::Probs(wires) => {
                    MeasurementResult::Probs(probability(&mut state, wires)?)
                }
                Measurement::Sample { shots, seed } => {
                    MeasurementResult::Samples(sample(&mut state, *shots, *seed)?)
                }
            })
        })?;
        let mut mine = None;
        for (_, result) in out.results {
            let r = result?;
            mine.get_or_insert(r);
        }
        Ok(mine.expect("at least one rank runs in this process"))
    }
}

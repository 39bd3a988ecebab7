use alloc::boxed::Box;

use crate::transport::TransportError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {n_qubits} qubits over 2^{log_ranks} ranks leaves fewer than one local qubit")]
    InvalidTopology { n_qubits: usize, log_ranks: usize },
    #[error("rank {rank} out of range for {n_ranks} ranks")]
    RankOutOfRange { rank: usize, n_ranks: usize },
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("qubit {0} used more than once by the same gate")]
    DuplicateOperand(usize),
    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid gate parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("qubit {qubit} is local (L = {local_qubits}); no partner rank exists")]
    NotNonLocal { qubit: usize, local_qubits: usize },
    #[error("bit {bit} is outside the local slice of {local_qubits} qubits")]
    BitOutOfRange { bit: usize, local_qubits: usize },
    #[error("buffer length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(
        "dense gate on non-local qubit {qubit} is unsupported; insert SWAPs to move its targets below qubit {local_qubits}"
    )]
    NonLocalDense { qubit: usize, local_qubits: usize },
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    BasisIndexOutOfRange { index: u64, n_qubits: usize },
    #[error("circuit has {circuit} qubits but the state has {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error("{what} of {n_qubits} qubits exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        n_qubits: usize,
        limit: usize,
    },
    #[error("state is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("gate {index} failed: {source}")]
    GateFailed { index: usize, source: Box<Error> },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl Error {
    /// Innermost error, looking through [`Error::GateFailed`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::GateFailed { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(self.root(), Error::Transport(_))
    }
}

//! The supported gate set.
//!
//! Named kinds are kept distinct from generic matrices so the engine can
//! pick specialized kernels and communication plans for them. Matrices
//! supplied by the caller are checked for unitarity on construction.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_traits::Float;

use crate::{Error, Result, C64, UNITARY_TOLERANCE};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A validated 2x2 unitary, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2([[C64; 2]; 2]);

impl Unitary2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        let deviation = unitarity_deviation(2, |r, c| m[r][c]);
        if deviation.is_nan() || deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn pauli_x() -> Self {
        Self([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self([[ZERO, -I], [I, ZERO]])
    }

    pub fn hadamard() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self([[h, h], [h, -h]])
    }

    /// `diag(d0, d1)`; both entries must have unit modulus.
    pub fn diagonal(d0: C64, d1: C64) -> Result<Self> {
        Self::new([[d0, ZERO], [ZERO, d1]])
    }
}

/// A validated `2^m x 2^m` unitary acting on `m <= 3` qubits, row-major.
///
/// Row and column indices are sub-indices over the target list: bit `j` of
/// a sub-index is the value of `targets[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    n_targets: usize,
    data: Vec<C64>,
}

impl DenseUnitary {
    pub const MAX_TARGETS: usize = 3;

    pub fn new(n_targets: usize, data: Vec<C64>) -> Result<Self> {
        if n_targets == 0 || n_targets > Self::MAX_TARGETS {
            return Err(Error::InvalidParameter("dense gates act on 1 to 3 qubits"));
        }
        let dim = 1 << n_targets;
        if data.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let deviation = unitarity_deviation(dim, |r, c| data[r * dim + c]);
        if deviation.is_nan() || deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { n_targets, data })
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn dim(&self) -> usize {
        1 << self.n_targets
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(self.get(c, r).conj());
            }
        }
        Self {
            n_targets: self.n_targets,
            data,
        }
    }
}

/// Max element of `|U^dagger U - I|`.
fn unitarity_deviation(dim: usize, m: impl Fn(usize, usize) -> C64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = ZERO;
            for k in 0..dim {
                acc += m(k, i).conj() * m(k, j);
            }
            if i == j {
                acc -= ONE;
            }
            let d = acc.norm();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Phase `e^{i pi / 2^(k-1)}` of `R_k`, so `R_1 = Z`, `R_2 = S`, `R_3 = T`.
pub fn rk_phase(k: u32) -> C64 {
    let angle = PI / Float::powi(2.0f64, k as i32 - 1);
    C64::from_polar(1.0, angle)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    /// `diag(1, i)`
    S(usize),
    /// `diag(1, e^{i pi/4})`
    T(usize),
    /// `diag(e^{-i theta/2}, e^{i theta/2})`
    Rz {
        target: usize,
        theta: f64,
    },
    /// `diag(1, e^{i pi / 2^(k-1)})`
    Rk {
        target: usize,
        k: u32,
    },
    U1q {
        target: usize,
        matrix: Unitary2,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Controlled `R_k`; symmetric in its two operands.
    Crk {
        control: usize,
        target: usize,
        k: u32,
    },
    Cu1q {
        control: usize,
        target: usize,
        matrix: Unitary2,
    },
    Swap(usize, usize),
    Dense {
        targets: Vec<usize>,
        matrix: DenseUnitary,
    },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::T(_) => "T",
            Gate::Rz { .. } => "RZ",
            Gate::Rk { .. } => "RK",
            Gate::U1q { .. } => "U1Q",
            Gate::Cnot { .. } => "CNOT",
            Gate::Crk { .. } => "CRK",
            Gate::Cu1q { .. } => "CU1Q",
            Gate::Swap(..) => "SWAP",
            Gate::Dense { .. } => "DENSE",
        }
    }

    /// Qubit operands; controls come first for controlled kinds.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(t) | Gate::Y(t) | Gate::Z(t) | Gate::H(t) | Gate::S(t) | Gate::T(t) => {
                alloc::vec![*t]
            }
            Gate::Rz { target, .. } | Gate::Rk { target, .. } | Gate::U1q { target, .. } => {
                alloc::vec![*target]
            }
            Gate::Cnot { control, target }
            | Gate::Crk {
                control, target, ..
            }
            | Gate::Cu1q {
                control, target, ..
            } => alloc::vec![*control, *target],
            Gate::Swap(a, b) => alloc::vec![*a, *b],
            Gate::Dense { targets, .. } => targets.clone(),
        }
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            Gate::Z(_)
                | Gate::S(_)
                | Gate::T(_)
                | Gate::Rz { .. }
                | Gate::Rk { .. }
                | Gate::Crk { .. }
        )
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateOperand(q));
            }
        }
        match self {
            Gate::Rk { k, .. } | Gate::Crk { k, .. } if *k == 0 => {
                Err(Error::InvalidParameter("R_k requires k >= 1"))
            }
            Gate::Rz { theta, .. } if !theta.is_finite() => {
                Err(Error::InvalidParameter("rotation angle must be finite"))
            }
            Gate::Dense { targets, matrix } if targets.len() != matrix.n_targets() => {
                Err(Error::LengthMismatch {
                    expected: matrix.n_targets(),
                    got: targets.len(),
                })
            }
            _ => Ok(()),
        }
    }

    /// The 2x2 payload of single-qubit and singly-controlled kinds.
    pub fn payload(&self) -> Option<Unitary2> {
        let diag = |d0, d1| Unitary2([[d0, ZERO], [ZERO, d1]]);
        Some(match self {
            Gate::X(_) | Gate::Cnot { .. } => Unitary2::pauli_x(),
            Gate::Y(_) => Unitary2::pauli_y(),
            Gate::H(_) => Unitary2::hadamard(),
            Gate::Z(_) => diag(ONE, -ONE),
            Gate::S(_) => diag(ONE, I),
            Gate::T(_) => diag(ONE, rk_phase(3)),
            Gate::Rz { theta, .. } => diag(
                C64::from_polar(1.0, -theta / 2.0),
                C64::from_polar(1.0, theta / 2.0),
            ),
            Gate::Rk { k, .. } | Gate::Crk { k, .. } => diag(ONE, rk_phase(*k)),
            Gate::U1q { matrix, .. } | Gate::Cu1q { matrix, .. } => *matrix,
            Gate::Swap(..) | Gate::Dense { .. } => return None,
        })
    }

    /// A gate undoing this one (up to nothing: exact inverse, not up to phase).
    pub fn inverse(&self) -> Gate {
        let conj_phase = |k: u32| Unitary2::diagonal(ONE, rk_phase(k).conj()).expect("unit phase");
        match self {
            Gate::X(_)
            | Gate::Y(_)
            | Gate::Z(_)
            | Gate::H(_)
            | Gate::Cnot { .. }
            | Gate::Swap(..) => self.clone(),
            Gate::S(t) => Gate::U1q {
                target: *t,
                matrix: conj_phase(2),
            },
            Gate::T(t) => Gate::U1q {
                target: *t,
                matrix: conj_phase(3),
            },
            Gate::Rz { target, theta } => Gate::Rz {
                target: *target,
                theta: -theta,
            },
            Gate::Rk { target, k } => Gate::U1q {
                target: *target,
                matrix: conj_phase(*k),
            },
            Gate::U1q { target, matrix } => Gate::U1q {
                target: *target,
                matrix: matrix.adjoint(),
            },
            Gate::Crk { control, target, k } => Gate::Cu1q {
                control: *control,
                target: *target,
                matrix: conj_phase(*k),
            },
            Gate::Cu1q {
                control,
                target,
                matrix,
            } => Gate::Cu1q {
                control: *control,
                target: *target,
                matrix: matrix.adjoint(),
            },
            Gate::Dense { targets, matrix } => Gate::Dense {
                targets: targets.clone(),
                matrix: matrix.adjoint(),
            },
        }
    }
}

//! The distributed state vector and the per-gate communication planner.
//!
//! Decision table (target `t`, control `c`, `L` local qubits):
//!
//! | gate                      | operands              | plan                                   |
//! |---------------------------|-----------------------|----------------------------------------|
//! | Z, S, T, RZ, RK, CRK      | any                   | no communication                       |
//! | X, Y, H, U1Q              | `t < L`               | no communication                       |
//! | X, Y, H, U1Q              | `t >= L`              | pair exchange, all ranks               |
//! | CNOT, CU1Q                | `c < L`, `t < L`      | no communication                       |
//! | CNOT, CU1Q                | `c >= L`, `t < L`     | local update on ranks with control bit |
//! | CNOT, CU1Q                | `c < L`, `t >= L`     | pair exchange, all ranks               |
//! | CNOT, CU1Q                | `c >= L`, `t >= L`    | pair exchange, ranks with control bit  |
//! | SWAP                      | both local            | no communication                       |
//! | SWAP                      | otherwise             | three CNOTs, each planned as above     |
//! | DENSE                     | all targets local     | no communication                       |
//!
//! Pair exchanges always move the full slice in one round to the partner
//! `rank XOR 2^(t - L)`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

use crate::kernels::{self, DiagTarget, DiagonalOp, PairOp};
use crate::{Circuit, Error, Gate, Result, Topology, Transport, TransportStats, C64};

/// Which ranks take part in a pair exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participants {
    All,
    /// Ranks whose rank bit `bit` is 1.
    ControlRankBit(usize),
}

impl Participants {
    pub fn includes(&self, rank: usize) -> bool {
        match *self {
            Participants::All => true,
            Participants::ControlRankBit(bit) => rank >> bit & 1 == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommPlan {
    NoComm,
    /// Ranks whose rank bit `control_rank_bit` is 1 apply the payload to a
    /// local target; nothing is sent.
    SelectedRanksLocal {
        control_rank_bit: usize,
    },
    PairExchange {
        distance: usize,
        participants: Participants,
    },
    /// Steps executed in order (non-local SWAP).
    Sequence(Vec<CommPlan>),
}

impl CommPlan {
    /// Exchanges `rank` performs under this plan.
    pub fn exchanges_on_rank(&self, rank: usize) -> usize {
        match self {
            CommPlan::NoComm | CommPlan::SelectedRanksLocal { .. } => 0,
            CommPlan::PairExchange { participants, .. } => participants.includes(rank) as usize,
            CommPlan::Sequence(steps) => steps.iter().map(|s| s.exchanges_on_rank(rank)).sum(),
        }
    }

    /// Partners `rank` exchanges with, in order.
    pub fn partners_of(&self, rank: usize) -> Vec<usize> {
        match self {
            CommPlan::NoComm | CommPlan::SelectedRanksLocal { .. } => Vec::new(),
            CommPlan::PairExchange {
                distance,
                participants,
            } => {
                if participants.includes(rank) {
                    vec![rank ^ distance]
                } else {
                    Vec::new()
                }
            }
            CommPlan::Sequence(steps) => steps.iter().flat_map(|s| s.partners_of(rank)).collect(),
        }
    }
}

fn pair_op(gate: &Gate) -> Option<PairOp> {
    match gate {
        Gate::X(_) | Gate::Cnot { .. } => Some(PairOp::X),
        Gate::Y(_) => Some(PairOp::Y),
        Gate::H(_) => Some(PairOp::H),
        Gate::U1q { matrix, .. } | Gate::Cu1q { matrix, .. } => Some(PairOp::Matrix(*matrix)),
        _ => None,
    }
}

fn swap_as_cnots(a: usize, b: usize) -> [Gate; 3] {
    [
        Gate::Cnot {
            control: a,
            target: b,
        },
        Gate::Cnot {
            control: b,
            target: a,
        },
        Gate::Cnot {
            control: a,
            target: b,
        },
    ]
}

/// Chooses the communication pattern of `gate` from its kind and operand
/// locality.
pub fn plan_gate(topo: &Topology, gate: &Gate) -> Result<CommPlan> {
    gate.validate(topo.n_qubits())?;
    let l = topo.local_qubits();
    let exchange = |target: usize, participants| CommPlan::PairExchange {
        distance: 1 << (target - l),
        participants,
    };
    if gate.is_diagonal() {
        return Ok(CommPlan::NoComm);
    }
    Ok(match gate {
        Gate::X(t) | Gate::Y(t) | Gate::H(t) | Gate::U1q { target: t, .. } => {
            if *t < l {
                CommPlan::NoComm
            } else {
                exchange(*t, Participants::All)
            }
        }
        Gate::Cnot { control, target }
        | Gate::Cu1q {
            control, target, ..
        } => match (*control < l, *target < l) {
            (true, true) => CommPlan::NoComm,
            (false, true) => CommPlan::SelectedRanksLocal {
                control_rank_bit: control - l,
            },
            (true, false) => exchange(*target, Participants::All),
            (false, false) => exchange(*target, Participants::ControlRankBit(control - l)),
        },
        Gate::Swap(a, b) => {
            if *a < l && *b < l {
                CommPlan::NoComm
            } else {
                CommPlan::Sequence(
                    swap_as_cnots(*a, *b)
                        .iter()
                        .map(|g| plan_gate(topo, g))
                        .collect::<Result<_>>()?,
                )
            }
        }
        Gate::Dense { targets, .. } => match targets.iter().find(|&&q| q >= l) {
            Some(&qubit) => {
                return Err(Error::NonLocalDense {
                    qubit,
                    local_qubits: l,
                })
            }
            None => CommPlan::NoComm,
        },
        _ => unreachable!("diagonal kinds handled above"),
    })
}

/// Default cap on the width of a gathered full state.
pub const DEFAULT_GATHER_LIMIT: usize = 26;

/// One rank's part of a partitioned state vector.
#[derive(Debug)]
pub struct DistState<T> {
    topo: Topology,
    amps: Vec<C64>,
    /// Receive buffer for pair exchanges; empty on single-rank worlds.
    scratch: Vec<C64>,
    transport: T,
    seq: u64,
    gather_limit: usize,
}

impl<T: Transport> DistState<T> {
    /// `|basis_index>` laid out over the transport's ranks.
    pub fn basis(n_qubits: usize, transport: T, basis_index: u64) -> Result<Self> {
        let topo = Topology::new(n_qubits, transport.log_ranks(), transport.rank())?;
        let (owner, offset) = topo.owner_of(basis_index)?;
        let mut amps = vec![C64::new(0.0, 0.0); topo.slice_len()];
        if owner == topo.rank() {
            amps[offset] = C64::new(1.0, 0.0);
        }
        let scratch = if topo.n_ranks() > 1 {
            vec![C64::new(0.0, 0.0); topo.slice_len()]
        } else {
            Vec::new()
        };
        Ok(Self {
            topo,
            amps,
            scratch,
            transport,
            seq: 0,
            gather_limit: DEFAULT_GATHER_LIMIT,
        })
    }

    /// `|basis_index>` for an explicit topology, which must agree with the
    /// transport's rank layout.
    pub fn init_basis_state(topo: &Topology, transport: T, basis_index: u64) -> Result<Self> {
        if transport.log_ranks() != topo.log_ranks() || transport.rank() != topo.rank() {
            return Err(Error::RankOutOfRange {
                rank: transport.rank(),
                n_ranks: topo.n_ranks(),
            });
        }
        Self::basis(topo.n_qubits(), transport, basis_index)
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Raw slice access. Writing through this can leave the state
    /// unnormalized.
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    pub fn into_transport(self) -> T {
        self.transport
    }

    pub fn stats(&self) -> TransportStats {
        self.transport.stats()
    }

    /// Sequence number of the most recent collective operation.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn set_gather_limit(&mut self, n_qubits: usize) {
        self.gather_limit = n_qubits;
    }

    /// Starts the next collective operation on every rank.
    pub(crate) fn next_op(&mut self) -> u64 {
        self.seq += 1;
        self.transport.begin_op(self.seq);
        self.seq
    }

    /// Collective: every rank applies the same gate in the same order.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let _plan = plan_gate(&self.topo, gate)?;
        self.next_op();
        self.execute(gate)
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.topo.n_qubits() {
            return Err(Error::WidthMismatch {
                circuit: circuit.n_qubits(),
                state: self.topo.n_qubits(),
            });
        }
        for (index, gate) in circuit.gates().iter().enumerate() {
            self.apply_gate(gate).map_err(|e| Error::GateFailed {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// Collective: element-wise sum of `values` over all ranks, in sequence
    /// with the gates.
    pub fn allreduce_sum(&mut self, values: &mut [f64]) -> Result<()> {
        self.next_op();
        Ok(self.transport.allreduce_sum(values)?)
    }

    /// Full state in global index order on rank 0; empty on other ranks.
    pub fn gather_full_state(&mut self) -> Result<Vec<C64>> {
        if self.topo.n_qubits() > self.gather_limit {
            return Err(Error::TooLarge {
                what: "gathered state",
                n_qubits: self.topo.n_qubits(),
                limit: self.gather_limit,
            });
        }
        self.next_op();
        Ok(self.transport.gather_to_root(&self.amps)?)
    }

    fn execute(&mut self, gate: &Gate) -> Result<()> {
        let l = self.topo.local_qubits();
        if gate.is_diagonal() {
            return self.apply_diagonal(gate);
        }
        match gate {
            Gate::X(t) | Gate::Y(t) | Gate::H(t) | Gate::U1q { target: t, .. } => {
                let op = pair_op(gate).expect("non-diagonal single-qubit kind");
                if *t < l {
                    kernels::apply_1q_pairs(&mut self.amps, op, *t)
                } else {
                    self.exchange_and_combine(op, *t, 0)
                }
            }
            Gate::Cnot { control, target }
            | Gate::Cu1q {
                control, target, ..
            } => {
                let op = pair_op(gate).expect("controlled kind");
                let (c, t) = (*control, *target);
                match (c < l, t < l) {
                    (true, true) => kernels::apply_controlled_pairs(&mut self.amps, op, c, t),
                    (false, true) if self.topo.rank_bit(c) => {
                        kernels::apply_1q_pairs(&mut self.amps, op, t)
                    }
                    (false, true) => Ok(()),
                    (true, false) => self.exchange_and_combine(op, t, 1 << c),
                    (false, false) if self.topo.rank_bit(c) => self.exchange_and_combine(op, t, 0),
                    (false, false) => Ok(()),
                }
            }
            Gate::Swap(a, b) => {
                if *a < l && *b < l {
                    kernels::swap_bits_local(&mut self.amps, *a, *b)
                } else {
                    swap_as_cnots(*a, *b)
                        .iter()
                        .try_for_each(|g| self.execute(g))
                }
            }
            Gate::Dense { targets, matrix } => {
                kernels::apply_dense_local(&mut self.amps, matrix, targets)
            }
            _ => unreachable!("diagonal kinds handled above"),
        }
    }

    fn apply_diagonal(&mut self, gate: &Gate) -> Result<()> {
        let phases = gate
            .payload()
            .expect("diagonal kinds carry a payload")
            .matrix();
        let phases = [phases[0][0], phases[1][1]];
        let (control, target) = match gate {
            Gate::Crk {
                control, target, ..
            } => (Some(*control), *target),
            _ => (None, gate.qubits()[0]),
        };
        let l = self.topo.local_qubits();
        let control_mask = match control {
            Some(c) if c < l => 1 << c,
            Some(c) if !self.topo.rank_bit(c) => return Ok(()),
            _ => 0,
        };
        let target = if target < l {
            DiagTarget::Local(target)
        } else {
            DiagTarget::Fixed(self.topo.rank_bit(target))
        };
        kernels::apply_diag(
            &mut self.amps,
            &DiagonalOp {
                control_mask,
                target,
                phases,
            },
        )
    }

    fn exchange_and_combine(
        &mut self,
        op: PairOp,
        target: usize,
        control_mask: usize,
    ) -> Result<()> {
        let partner = self.topo.pair_rank(target)?;
        if self.scratch.len() != self.amps.len() {
            self.scratch = vec![C64::new(0.0, 0.0); self.amps.len()];
        }
        self.transport
            .exchange(partner, &self.amps, &mut self.scratch)?;
        if op == PairOp::X && control_mask == 0 {
            // adopting the partner's slice needs no arithmetic
            mem::swap(&mut self.amps, &mut self.scratch);
            return Ok(());
        }
        kernels::combine_after_exchange(
            &mut self.amps,
            &self.scratch,
            op,
            self.topo.rank_bit(target),
            control_mask,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Solo;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn topo(n: usize, p: usize) -> Topology {
        Topology::new(n, p, 0).unwrap()
    }

    #[test]
    fn diagonal_gates_never_communicate() {
        for p in 0..4 {
            let t = topo(5, p);
            for q in 0..5 {
                for g in [
                    Gate::Z(q),
                    Gate::S(q),
                    Gate::T(q),
                    Gate::Rz {
                        target: q,
                        theta: 0.1,
                    },
                    Gate::Rk { target: q, k: 4 },
                    Gate::Crk {
                        control: (q + 1) % 5,
                        target: q,
                        k: 2,
                    },
                ] {
                    assert_eq!(plan_gate(&t, &g).unwrap(), CommPlan::NoComm);
                }
            }
        }
    }

    #[test]
    fn x_on_top_qubit_pairs_at_distance_512() {
        let plan = plan_gate(&topo(35, 10), &Gate::X(34)).unwrap();
        assert_eq!(
            plan,
            CommPlan::PairExchange {
                distance: 512,
                participants: Participants::All
            }
        );
    }

    #[test]
    fn cnot_four_cases() {
        let t = topo(4, 2); // L = 2
        let cnot = |control, target| plan_gate(&t, &Gate::Cnot { control, target }).unwrap();
        assert_eq!(cnot(0, 1), CommPlan::NoComm);
        assert_eq!(
            cnot(3, 0),
            CommPlan::SelectedRanksLocal {
                control_rank_bit: 1
            }
        );
        assert_eq!(
            cnot(1, 2),
            CommPlan::PairExchange {
                distance: 1,
                participants: Participants::All
            }
        );
        let case4 = cnot(3, 2);
        assert_eq!(
            case4,
            CommPlan::PairExchange {
                distance: 1,
                participants: Participants::ControlRankBit(1)
            }
        );
        assert_eq!(
            (0..4)
                .map(|r| case4.exchanges_on_rank(r))
                .collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );
    }

    #[test]
    fn swap_and_dense_plans() {
        let t = topo(4, 2);
        assert_eq!(plan_gate(&t, &Gate::Swap(0, 1)).unwrap(), CommPlan::NoComm);
        let p = plan_gate(&t, &Gate::Swap(0, 3)).unwrap();
        assert!(matches!(&p, CommPlan::Sequence(steps) if steps.len() == 3));
        assert_eq!(p.exchanges_on_rank(0), 2);
        assert_eq!(p.partners_of(1), vec![3, 3]);
        let dense = Gate::Dense {
            targets: vec![1, 2],
            matrix: crate::DenseUnitary::new(2, {
                let mut d = vec![C64::new(0.0, 0.0); 16];
                for i in 0..4 {
                    d[i * 5] = C64::new(1.0, 0.0);
                }
                d
            })
            .unwrap(),
        };
        assert_eq!(
            plan_gate(&t, &dense),
            Err(Error::NonLocalDense {
                qubit: 2,
                local_qubits: 2
            })
        );
    }

    #[test]
    fn bell_state_on_one_rank() {
        let mut s = DistState::basis(2, Solo::new(), 0).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        s.apply_gate(&Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        let full = s.gather_full_state().unwrap();
        let h = FRAC_1_SQRT_2;
        let want = [h, 0.0, 0.0, h];
        for (a, w) in full.iter().zip(want) {
            assert!((a - C64::new(w, 0.0)).norm() < 1e-15);
        }
        assert_eq!(s.stats().exchanges, 0);
    }

    #[test]
    fn basis_state_placement() {
        let s = DistState::basis(3, Solo::new(), 5).unwrap();
        assert_eq!(s.amplitudes()[5], C64::new(1.0, 0.0));
        assert!(matches!(
            DistState::basis(3, Solo::new(), 8),
            Err(Error::BasisIndexOutOfRange { index: 8, .. })
        ));
    }

    #[test]
    fn crk_phase_on_eleven() {
        let mut s = DistState::basis(2, Solo::new(), 3).unwrap();
        s.apply_gate(&Gate::Crk {
            control: 0,
            target: 1,
            k: 2,
        })
        .unwrap();
        assert!((s.amplitudes()[3] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn circuit_width_is_checked_and_empty_is_noop() {
        let mut s = DistState::basis(2, Solo::new(), 0).unwrap();
        let c = Circuit::from_gates(2, [Gate::H(0)]).unwrap();
        s.apply_circuit(&c).unwrap();
        let wide = Circuit::from_gates(3, [Gate::H(2)]).unwrap();
        assert!(matches!(
            s.apply_circuit(&wide),
            Err(Error::WidthMismatch { .. })
        ));
        let empty = Circuit::new(2);
        let before = s.amplitudes().to_vec();
        s.apply_circuit(&empty).unwrap();
        assert_eq!(s.amplitudes(), &before[..]);
    }

    #[test]
    fn gather_guard() {
        let mut s = DistState::basis(4, Solo::new(), 0).unwrap();
        s.set_gather_limit(3);
        assert!(matches!(s.gather_full_state(), Err(Error::TooLarge { .. })));
    }
}

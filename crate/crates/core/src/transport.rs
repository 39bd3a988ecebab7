//! Message passing between ranks.
//!
//! Every multi-rank backend provides the same four collective-style
//! operations: a pairwise full-buffer exchange, an element-wise all-reduce,
//! a gather to rank 0, and a counter snapshot. Backends are expected to
//! tag messages with the current operation sequence number (see
//! [`Transport::begin_op`]) and reject mismatches, so ranks that diverge
//! in call order fail loudly instead of mixing data.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::topology::BYTES_PER_AMPLITUDE;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("rank {rank}: cannot exchange with itself")]
    SelfExchange { rank: usize },
    #[error("rank {rank}: peer {peer} is not part of a world of {n_ranks} ranks")]
    NoSuchPeer {
        rank: usize,
        peer: usize,
        n_ranks: usize,
    },
    #[error("rank {rank}: buffer length mismatch with rank {peer} ({ours} vs {theirs})")]
    LengthMismatch {
        rank: usize,
        peer: usize,
        ours: usize,
        theirs: usize,
    },
    #[error("rank {rank}: peer {peer} is absent or disconnected")]
    PeerAbsent { rank: usize, peer: usize },
    #[error(
        "rank {rank}: out-of-order message from rank {peer} (expected op {expected}, got {got})"
    )]
    OutOfOrder {
        rank: usize,
        peer: usize,
        expected: u64,
        got: u64,
    },
    #[error("rank {rank}: {message}")]
    Backend { rank: usize, message: String },
}

/// Traffic attributed to one operation sequence number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateTraffic {
    pub exchanges: u64,
    pub bytes_sent: u64,
    /// Exchange partners in call order.
    pub partners: Vec<usize>,
}

/// Monotone counters of one rank.
///
/// `bytes_sent` counts pair-exchange payload only; reductions and gathers
/// are counted by call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransportStats {
    pub exchanges: u64,
    pub bytes_sent: u64,
    pub allreduces: u64,
    pub gathers: u64,
    pub per_gate: BTreeMap<u64, GateTraffic>,
}

impl TransportStats {
    /// Exchange traffic recorded under sequence number `seq`.
    pub fn gate(&self, seq: u64) -> GateTraffic {
        self.per_gate.get(&seq).cloned().unwrap_or_default()
    }
}

/// Bookkeeping shared by backends.
#[derive(Debug, Clone, Default)]
pub struct StatsRecorder {
    stats: TransportStats,
    seq: u64,
}

impl StatsRecorder {
    pub fn begin_op(&mut self, seq: u64) {
        self.seq = seq;
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn record_exchange(&mut self, partner: usize, amplitudes: usize) {
        let bytes = amplitudes as u64 * BYTES_PER_AMPLITUDE;
        self.stats.exchanges += 1;
        self.stats.bytes_sent += bytes;
        let entry = self.stats.per_gate.entry(self.seq).or_default();
        entry.exchanges += 1;
        entry.bytes_sent += bytes;
        entry.partners.push(partner);
    }

    pub fn record_allreduce(&mut self) {
        self.stats.allreduces += 1;
    }

    pub fn record_gather(&mut self) {
        self.stats.gathers += 1;
    }

    pub fn snapshot(&self) -> TransportStats {
        self.stats.clone()
    }
}

pub trait Transport {
    fn rank(&self) -> usize;

    /// `p`, with `2^p` ranks in the world.
    fn log_ranks(&self) -> usize;

    fn n_ranks(&self) -> usize {
        1 << self.log_ranks()
    }

    /// Marks the start of collective operation `seq`; all ranks call this
    /// with the same sequence.
    fn begin_op(&mut self, seq: u64);

    /// Sends `send` to `partner` and receives its buffer into `recv`.
    /// Both sides must call with equal lengths; the call returns once the
    /// partner's full buffer has arrived.
    fn exchange(
        &mut self,
        partner: usize,
        send: &[C64],
        recv: &mut [C64],
    ) -> Result<(), TransportError>;

    /// Element-wise sum over all ranks, left in `values` on every rank.
    /// The reduction order is fixed, so results are bit-reproducible.
    fn allreduce_sum(&mut self, values: &mut [f64]) -> Result<(), TransportError>;

    /// Concatenation of all slices in rank order on rank 0; empty elsewhere.
    fn gather_to_root(&mut self, local: &[C64]) -> Result<Vec<C64>, TransportError>;

    fn stats(&self) -> TransportStats;
}

/// The one-rank world.
#[derive(Debug, Clone, Default)]
pub struct Solo {
    recorder: StatsRecorder,
}

impl Solo {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Transport for Solo {
    fn rank(&self) -> usize {
        0
    }

    fn log_ranks(&self) -> usize {
        0
    }

    fn begin_op(&mut self, seq: u64) {
        self.recorder.begin_op(seq);
    }

    fn exchange(
        &mut self,
        partner: usize,
        _send: &[C64],
        _recv: &mut [C64],
    ) -> Result<(), TransportError> {
        Err(if partner == 0 {
            TransportError::SelfExchange { rank: 0 }
        } else {
            TransportError::NoSuchPeer {
                rank: 0,
                peer: partner,
                n_ranks: 1,
            }
        })
    }

    fn allreduce_sum(&mut self, _values: &mut [f64]) -> Result<(), TransportError> {
        self.recorder.record_allreduce();
        Ok(())
    }

    fn gather_to_root(&mut self, local: &[C64]) -> Result<Vec<C64>, TransportError> {
        self.recorder.record_gather();
        Ok(local.to_vec())
    }

    fn stats(&self) -> TransportStats {
        self.recorder.snapshot()
    }
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn rank(&self) -> usize {
        (**self).rank()
    }

    fn log_ranks(&self) -> usize {
        (**self).log_ranks()
    }

    fn begin_op(&mut self, seq: u64) {
        (**self).begin_op(seq)
    }

    fn exchange(
        &mut self,
        partner: usize,
        send: &[C64],
        recv: &mut [C64],
    ) -> Result<(), TransportError> {
        (**self).exchange(partner, send, recv)
    }

    fn allreduce_sum(&mut self, values: &mut [f64]) -> Result<(), TransportError> {
        (**self).allreduce_sum(values)
    }

    fn gather_to_root(&mut self, local: &[C64]) -> Result<Vec<C64>, TransportError> {
        (**self).gather_to_root(local)
    }

    fn stats(&self) -> TransportStats {
        (**self).stats()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solo_is_identity() {
        let mut t = Solo::new();
        assert_eq!(t.stats(), TransportStats::default());
        let mut v = [1.0, 2.0];
        t.allreduce_sum(&mut v).unwrap();
        assert_eq!(v, [1.0, 2.0]);
        let a = [C64::new(0.5, 0.5)];
        assert_eq!(t.gather_to_root(&a).unwrap(), a.to_vec());
        assert_eq!(
            t.exchange(0, &a, &mut [C64::new(0.0, 0.0)]),
            Err(TransportError::SelfExchange { rank: 0 })
        );
        assert_eq!(t.stats().allreduces, 1);
        assert_eq!(t.stats().exchanges, 0);
    }

    #[test]
    fn recorder_attributes_traffic_to_sequence() {
        let mut r = StatsRecorder::default();
        r.begin_op(7);
        r.record_exchange(3, 256);
        let s = r.snapshot();
        assert_eq!(s.bytes_sent, 256 * 16);
        assert_eq!(s.gate(7).partners, alloc::vec![3]);
        assert_eq!(s.gate(8), GateTraffic::default());
    }
}

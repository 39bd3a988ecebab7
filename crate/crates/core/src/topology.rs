//! Rank layout of a partitioned state vector.
//!
//! Qubit `q` is bit `q` of the global amplitude index. With `L = N - p`
//! local qubits, global index `i` lives on rank `i >> L` at offset
//! `i & (2^L - 1)`, so the low `L` qubits are local and qubit `q >= L`
//! selects rank bit `q - L`.

use crate::{Error, Result};

/// Largest supported register; global indices must fit in a `u64`.
pub const MAX_QUBITS: usize = 63;

/// Bytes per stored amplitude (two `f64` components).
pub const BYTES_PER_AMPLITUDE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    n_qubits: usize,
    log_ranks: usize,
    rank: usize,
}

/// Where a qubit's index bit lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Locality {
    /// Bit of the slice offset.
    Local(usize),
    /// Bit of the rank id.
    NonLocal(usize),
}

impl Topology {
    pub fn new(n_qubits: usize, log_ranks: usize, rank: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS || log_ranks >= n_qubits {
            return Err(Error::InvalidTopology {
                n_qubits,
                log_ranks,
            });
        }
        let n_ranks = 1usize << log_ranks;
        if rank >= n_ranks {
            return Err(Error::RankOutOfRange { rank, n_ranks });
        }
        Ok(Self {
            n_qubits,
            log_ranks,
            rank,
        })
    }

    /// Same layout, different rank.
    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        Self::new(self.n_qubits, self.log_ranks, rank)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn log_ranks(&self) -> usize {
        self.log_ranks
    }

    pub fn n_ranks(&self) -> usize {
        1 << self.log_ranks
    }

    /// `L = N - p`.
    pub fn local_qubits(&self) -> usize {
        self.n_qubits - self.log_ranks
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Amplitudes held by each rank (`2^L`).
    pub fn slice_len(&self) -> usize {
        1 << self.local_qubits()
    }

    pub fn is_local(&self, qubit: usize) -> bool {
        qubit < self.local_qubits()
    }

    pub fn locality(&self, qubit: usize) -> Result<Locality> {
        self.check_qubit(qubit)?;
        let l = self.local_qubits();
        Ok(if qubit < l {
            Locality::Local(qubit)
        } else {
            Locality::NonLocal(qubit - l)
        })
    }

    /// Exchange partner for a gate targeting the non-local qubit `target`:
    /// `rank XOR 2^(target - L)`.
    pub fn pair_rank(&self, target: usize) -> Result<usize> {
        match self.locality(target)? {
            Locality::NonLocal(bit) => Ok(self.rank ^ (1 << bit)),
            Locality::Local(_) => Err(Error::NotNonLocal {
                qubit: target,
                local_qubits: self.local_qubits(),
            }),
        }
    }

    /// Rank distance `D = 2^(target - L)` of a non-local target.
    pub fn pair_distance(&self, target: usize) -> Result<usize> {
        self.pair_rank(target).map(|partner| partner ^ self.rank)
    }

    /// Value of a non-local qubit's bit on this rank. Panics for local qubits.
    pub fn rank_bit(&self, qubit: usize) -> bool {
        let l = self.local_qubits();
        assert!(
            qubit >= l && qubit < self.n_qubits,
            "qubit {qubit} is not non-local"
        );
        (self.rank >> (qubit - l)) & 1 == 1
    }

    /// Global index of `offset` in this rank's slice.
    pub fn global_index(&self, offset: usize) -> u64 {
        ((self.rank as u64) << self.local_qubits()) | offset as u64
    }

    /// Rank and offset holding global index `index`.
    pub fn owner_of(&self, index: u64) -> Result<(usize, usize)> {
        if index >> self.n_qubits != 0 {
            return Err(Error::BasisIndexOutOfRange {
                index,
                n_qubits: self.n_qubits,
            });
        }
        let l = self.local_qubits();
        Ok(((index >> l) as usize, (index & ((1u64 << l) - 1)) as usize))
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }
}

/// Bytes of amplitude storage per rank, excluding the exchange buffer.
pub fn memory_bytes_per_rank(n_qubits: u32, log_ranks: u32) -> u128 {
    (1u128 << n_qubits.saturating_sub(log_ranks)) * BYTES_PER_AMPLITUDE as u128
}

/// Bytes per rank including the receive buffer used by pair exchanges.
pub fn memory_bytes_per_rank_with_scratch(n_qubits: u32, log_ranks: u32) -> u128 {
    2 * memory_bytes_per_rank(n_qubits, log_ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_qubits_over_four_ranks() {
        let t = Topology::new(4, 2, 0).unwrap();
        assert_eq!(t.local_qubits(), 2);
        assert_eq!(t.slice_len(), 4);
        assert_eq!(Topology::new(35, 7, 0).unwrap().local_qubits(), 28);
    }

    #[test]
    fn rejects_empty_slices_and_bad_ranks() {
        assert!(matches!(
            Topology::new(4, 4, 0),
            Err(Error::InvalidTopology { .. })
        ));
        assert!(matches!(
            Topology::new(0, 0, 0),
            Err(Error::InvalidTopology { .. })
        ));
        assert!(matches!(
            Topology::new(4, 2, 4),
            Err(Error::RankOutOfRange {
                rank: 4,
                n_ranks: 4
            })
        ));
    }

    #[test]
    fn locality_examples() {
        let t = Topology::new(4, 2, 0).unwrap();
        assert_eq!(t.locality(1).unwrap(), Locality::Local(1));
        assert_eq!(t.locality(3).unwrap(), Locality::NonLocal(1));
        assert!(t.locality(4).is_err());
        let big = Topology::new(35, 7, 0).unwrap();
        assert_eq!(big.locality(28).unwrap(), Locality::NonLocal(0));
    }

    #[test]
    fn pair_rank_examples() {
        assert_eq!(Topology::new(4, 2, 0).unwrap().pair_rank(3).unwrap(), 2);
        assert_eq!(Topology::new(4, 2, 1).unwrap().pair_rank(2).unwrap(), 0);
        // D = 2^(34 - 25)
        assert_eq!(
            Topology::new(35, 10, 0).unwrap().pair_rank(34).unwrap(),
            512
        );
        assert!(matches!(
            Topology::new(4, 2, 0).unwrap().pair_rank(1),
            Err(Error::NotNonLocal { qubit: 1, .. })
        ));
    }

    #[test]
    fn memory_examples() {
        assert_eq!(memory_bytes_per_rank(30, 0), 17_179_869_184);
        assert_eq!(memory_bytes_per_rank(40, 0), 1 << 44);
        assert_eq!(memory_bytes_per_rank(10, 2), 4096);
        assert_eq!(memory_bytes_per_rank_with_scratch(10, 2), 8192);
    }

    #[test]
    fn owner_round_trip() {
        let t = Topology::new(4, 2, 0).unwrap();
        assert_eq!(t.owner_of(12).unwrap(), (3, 0));
        assert!(t.owner_of(16).is_err());
        let r3 = t.with_rank(3).unwrap();
        assert_eq!(r3.global_index(0), 12);
    }

    proptest! {
        #[test]
        fn locality_partitions_qubits(n in 1usize..40, p_frac in 0.0f64..1.0) {
            let p = ((n - 1) as f64 * p_frac) as usize;
            let t = Topology::new(n, p, 0).unwrap();
            let local = (0..n).filter(|&q| matches!(t.locality(q).unwrap(), Locality::Local(_))).count();
            prop_assert_eq!(local, t.local_qubits());
            prop_assert_eq!(n - local, p);
        }

        #[test]
        fn pair_rank_is_an_involution(n in 2usize..30, p_frac in 0.0f64..1.0, rank_seed: u64, q_seed: u64) {
            let p = 1 + ((n - 2) as f64 * p_frac) as usize;
            let rank = (rank_seed % (1 << p)) as usize;
            let t = Topology::new(n, p, rank).unwrap();
            let q = t.local_qubits() + (q_seed as usize % p);
            let partner = t.pair_rank(q).unwrap();
            let back = t.with_rank(partner).unwrap().pair_rank(q).unwrap();
            prop_assert_eq!(back, rank);
            prop_assert_eq!(partner ^ rank, 1 << (q - t.local_qubits()));
        }

        #[test]
        fn memory_scales_with_rank_count(n in 1u32..=40, p in 0u32..=10) {
            prop_assume!(p < n);
            prop_assert_eq!(memory_bytes_per_rank(n, p) << p, memory_bytes_per_rank(n, 0));
        }
    }
}

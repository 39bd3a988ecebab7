//! Terminal measurements on a [`DistState`].
//!
//! All functions here are collective: every rank calls them in the same
//! order, and each performs local partial sums followed by an all-reduce.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{DistState, Error, Gate, Result, Transport};

/// Largest marginal table [`probability`] will build.
pub const MAX_SUBSET: usize = 20;

/// Allowed `|norm^2 - 1|` before expectation values and sampling refuse a
/// state.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// `coefficient * P_{q0} P_{q1} ...`, identity on all other qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    factors: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(
        coefficient: f64,
        factors: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Result<Self> {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_unstable();
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateOperand(w[0].0));
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter("Pauli coefficient must be finite"));
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }

    /// `coefficient * I`.
    pub fn identity(coefficient: f64) -> Self {
        Self {
            coefficient,
            factors: Vec::new(),
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Factors sorted by qubit.
    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match self.factors.iter().find(|(q, _)| *q >= n_qubits) {
            Some(&(qubit, _)) => Err(Error::QubitOutOfRange { qubit, n_qubits }),
            None => Ok(()),
        }
    }

    /// Bit mask of the qubits this term acts on.
    pub fn support_mask(&self) -> u64 {
        self.factors.iter().fold(0, |m, (q, _)| m | 1 << q)
    }
}

fn local_norm_sq<T: Transport>(state: &DistState<T>) -> f64 {
    state.amplitudes().iter().map(|a| a.norm_sqr()).sum()
}

/// `sum |a_i|^2` over all ranks; identical on every rank.
pub fn norm_sq<T: Transport>(state: &mut DistState<T>) -> Result<f64> {
    let mut v = [local_norm_sq(state)];
    state.next_op();
    state.transport_mut().allreduce_sum(&mut v)?;
    Ok(v[0])
}

fn require_normalized<T: Transport>(state: &mut DistState<T>) -> Result<()> {
    let n = norm_sq(state)?;
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sq: n });
    }
    Ok(())
}

/// Marginal distribution over `subset`. Entry `b` sums `|a_i|^2` over the
/// indices where qubit `subset[j]` equals bit `j` of `b`.
pub fn probability<T: Transport>(state: &mut DistState<T>, subset: &[usize]) -> Result<Vec<f64>> {
    let topo = *state.topology();
    if subset.len() > MAX_SUBSET {
        return Err(Error::TooLarge {
            what: "probability table",
            n_qubits: subset.len(),
            limit: MAX_SUBSET,
        });
    }
    for (i, &q) in subset.iter().enumerate() {
        topo.check_qubit(q)?;
        if subset[..i].contains(&q) {
            return Err(Error::DuplicateOperand(q));
        }
    }
    let mut table = vec![0.0; 1 << subset.len()];
    for (offset, a) in state.amplitudes().iter().enumerate() {
        let index = topo.global_index(offset);
        let b = subset
            .iter()
            .enumerate()
            .fold(0usize, |b, (j, &q)| b | ((index >> q & 1) as usize) << j);
        table[b] += a.norm_sqr();
    }
    state.next_op();
    state.transport_mut().allreduce_sum(&mut table)?;
    Ok(table)
}

/// `sum_i |a_i|^2 (-1)^popcount(i & mask)` over this rank's slice.
fn local_parity<T: Transport>(state: &DistState<T>, mask: u64) -> f64 {
    let topo = state.topology();
    let l = topo.local_qubits();
    let rank_odd = ((topo.rank() as u64) & (mask >> l)).count_ones() & 1 == 1;
    let local_mask = (mask & ((1u64 << l) - 1)) as usize;
    let (mut even, mut odd) = (0.0, 0.0);
    for (offset, a) in state.amplitudes().iter().enumerate() {
        if (offset & local_mask).count_ones() & 1 == 1 {
            odd += a.norm_sqr();
        } else {
            even += a.norm_sqr();
        }
    }
    if rank_odd {
        odd - even
    } else {
        even - odd
    }
}

/// `<psi| sum_s c_s P_s |psi>`.
///
/// Terms with X or Y factors are measured on a rotated copy of the state
/// (H for X; `RZ(-pi/2)` then H for Y), which is restored afterwards.
pub fn expval_pauli_sum<T: Transport>(
    state: &mut DistState<T>,
    terms: &[PauliTerm],
) -> Result<f64> {
    let n = state.topology().n_qubits();
    for t in terms {
        t.validate(n)?;
    }
    require_normalized(state)?;
    let mut backup: Vec<_> = Vec::new();
    let mut values = Vec::with_capacity(terms.len());
    for term in terms {
        let needs_rotation = term.factors().iter().any(|(_, p)| *p != Pauli::Z);
        if needs_rotation {
            if backup.is_empty() {
                backup = state.amplitudes().to_vec();
            }
            for &(q, p) in term.factors() {
                match p {
                    Pauli::Z => {}
                    Pauli::X => state.apply_gate(&Gate::H(q))?,
                    Pauli::Y => {
                        state.apply_gate(&Gate::Rz {
                            target: q,
                            theta: -FRAC_PI_2,
                        })?;
                        state.apply_gate(&Gate::H(q))?;
                    }
                }
            }
        }
        values.push(local_parity(state, term.support_mask()));
        if needs_rotation {
            state.amplitudes_mut().copy_from_slice(&backup);
        }
    }
    state.next_op();
    state.transport_mut().allreduce_sum(&mut values)?;
    Ok(terms
        .iter()
        .zip(&values)
        .map(|(t, v)| t.coefficient() * v)
        .sum())
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// First position whose running total exceeds `target`, falling back to
/// the last position with nonzero weight.
fn inverse_cdf(weights: impl Iterator<Item = f64> + Clone, target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_nonzero = i;
        }
        acc += w;
        if acc > target && w > 0.0 {
            return i;
        }
    }
    last_nonzero
}

/// Draws `shots` basis indices from `|a_i|^2`.
///
/// Shot `k` uses ChaCha8 stream `k` of `seed`: the first draw picks the
/// owning rank from the per-rank masses, the second picks an offset inside
/// that rank's slice. Results are identical on every rank and depend only
/// on `(seed, p, state)`.
pub fn sample<T: Transport>(state: &mut DistState<T>, shots: usize, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1"));
    }
    let topo = *state.topology();
    let mut rank_mass = vec![0.0; topo.n_ranks()];
    let local_total = local_norm_sq(state);
    rank_mass[topo.rank()] = local_total;
    state.next_op();
    state.transport_mut().allreduce_sum(&mut rank_mass)?;
    let total: f64 = rank_mass.iter().sum();
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sq: total });
    }

    let mut picks = vec![0.0; shots];
    for (k, pick) in picks.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let owner = inverse_cdf(rank_mass.iter().copied(), uniform(&mut rng) * total);
        let u = uniform(&mut rng);
        if owner == topo.rank() {
            let weights = state.amplitudes().iter().map(|a| a.norm_sqr());
            let offset = inverse_cdf(weights, u * local_total);
            *pick = topo.global_index(offset) as f64;
        }
    }
    // exactly one rank contributes each entry; indices below 2^53 are exact
    state.next_op();
    state.transport_mut().allreduce_sum(&mut picks)?;
    Ok(picks.into_iter().map(|x| x as u64).collect())
}

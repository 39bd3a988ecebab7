//! Gate arithmetic on one rank's amplitude slice.
//!
//! Bit arguments are offset bits (`< L`). Named operators only touch the
//! nonzero entries of their matrix; [`PairOp::Matrix`] is the general 2x2
//! path and always performs the full four products per pair.

use core::f64::consts::FRAC_1_SQRT_2;
use core::mem;

use crate::{DenseUnitary, Error, Result, Unitary2, C64};

#[cfg(debug_assertions)]
static MULS: core::sync::atomic::AtomicUsize = core::sync::atomic::AtomicUsize::new(0);

#[inline]
fn count_muls(_n: usize) {
    #[cfg(debug_assertions)]
    MULS.fetch_add(_n, core::sync::atomic::Ordering::Relaxed);
}

/// Amplitude multiplications performed by kernels in this process so far.
/// Only tracked in debug builds; always 0 in release builds.
pub fn mul_count() -> usize {
    #[cfg(debug_assertions)]
    {
        MULS.load(core::sync::atomic::Ordering::Relaxed)
    }
    #[cfg(not(debug_assertions))]
    {
        0
    }
}

/// A non-diagonal single-qubit operator, by nonzero structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairOp {
    X,
    Y,
    H,
    Matrix(Unitary2),
}

impl PairOp {
    pub fn matrix(&self) -> Unitary2 {
        match self {
            PairOp::X => Unitary2::pauli_x(),
            PairOp::Y => Unitary2::pauli_y(),
            PairOp::H => Unitary2::hadamard(),
            PairOp::Matrix(m) => *m,
        }
    }
}

/// `-i z` without multiplying.
#[inline]
fn times_neg_i(z: C64) -> C64 {
    C64::new(z.im, -z.re)
}

/// `i z` without multiplying.
#[inline]
fn times_i(z: C64) -> C64 {
    C64::new(-z.im, z.re)
}

fn local_qubits(slice: &[C64]) -> Result<usize> {
    if !slice.len().is_power_of_two() {
        return Err(Error::InvalidParameter(
            "slice length must be a power of two",
        ));
    }
    Ok(slice.len().trailing_zeros() as usize)
}

fn check_bit(bit: usize, l: usize) -> Result<()> {
    if bit >= l {
        Err(Error::BitOutOfRange {
            bit,
            local_qubits: l,
        })
    } else {
        Ok(())
    }
}

/// Calls `f(a0, a1)` for every pair `(j, j + 2^t_bit)` with bit `t_bit` of
/// `j` clear and all `control_mask` bits set. Returns the pair count.
fn for_each_pair<F>(slice: &mut [C64], t_bit: usize, control_mask: usize, mut f: F) -> usize
where
    F: FnMut(&mut C64, &mut C64),
{
    let stride = 1usize << t_bit;
    let mut touched = 0;
    for (ci, chunk) in slice.chunks_exact_mut(2 * stride).enumerate() {
        let base = ci * 2 * stride;
        let (lo, hi) = chunk.split_at_mut(stride);
        if control_mask == 0 {
            for (a0, a1) in lo.iter_mut().zip(hi) {
                f(a0, a1);
            }
            touched += stride;
        } else {
            for (i, (a0, a1)) in lo.iter_mut().zip(hi).enumerate() {
                if (base + i) & control_mask == control_mask {
                    f(a0, a1);
                    touched += 1;
                }
            }
        }
    }
    touched
}

fn apply_pair_op(slice: &mut [C64], op: PairOp, t_bit: usize, control_mask: usize) {
    match op {
        PairOp::X => {
            for_each_pair(slice, t_bit, control_mask, mem::swap);
        }
        PairOp::Y => {
            for_each_pair(slice, t_bit, control_mask, |a0, a1| {
                let (x0, x1) = (*a0, *a1);
                *a0 = times_neg_i(x1);
                *a1 = times_i(x0);
            });
        }
        PairOp::H => {
            let n = for_each_pair(slice, t_bit, control_mask, |a0, a1| {
                let (x0, x1) = (*a0, *a1);
                *a0 = (x0 + x1) * FRAC_1_SQRT_2;
                *a1 = (x0 - x1) * FRAC_1_SQRT_2;
            });
            count_muls(2 * n);
        }
        PairOp::Matrix(m) => {
            let [[u00, u01], [u10, u11]] = m.matrix();
            let n = for_each_pair(slice, t_bit, control_mask, |a0, a1| {
                let (x0, x1) = (*a0, *a1);
                *a0 = u00 * x0 + u01 * x1;
                *a1 = u10 * x0 + u11 * x1;
            });
            count_muls(4 * n);
        }
    }
}

/// Applies `op` to qubit `t_bit` of the slice.
pub fn apply_1q_pairs(slice: &mut [C64], op: PairOp, t_bit: usize) -> Result<()> {
    let l = local_qubits(slice)?;
    check_bit(t_bit, l)?;
    apply_pair_op(slice, op, t_bit, 0);
    Ok(())
}

/// Applies `op` to `t_bit` on the offsets where `c_bit` is 1.
pub fn apply_controlled_pairs(
    slice: &mut [C64],
    op: PairOp,
    c_bit: usize,
    t_bit: usize,
) -> Result<()> {
    let l = local_qubits(slice)?;
    check_bit(c_bit, l)?;
    check_bit(t_bit, l)?;
    if c_bit == t_bit {
        return Err(Error::DuplicateOperand(c_bit));
    }
    apply_pair_op(slice, op, t_bit, 1 << c_bit);
    Ok(())
}

/// Location of the phased bit of a diagonal operator, seen from one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagTarget {
    /// An offset bit.
    Local(usize),
    /// A rank bit; its value is constant over the slice.
    Fixed(bool),
}

/// `amplitude *= phases[target bit]` on every offset whose `control_mask`
/// bits are all set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalOp {
    pub control_mask: usize,
    pub target: DiagTarget,
    pub phases: [C64; 2],
}

#[derive(Clone, Copy)]
enum Factor {
    One,
    Neg,
    Mul(C64),
}

impl Factor {
    fn of(z: C64) -> Self {
        if z == C64::new(1.0, 0.0) {
            Factor::One
        } else if z == C64::new(-1.0, 0.0) {
            Factor::Neg
        } else {
            Factor::Mul(z)
        }
    }

    /// Scales the amplitudes of `run` at positions passing `keep`; returns
    /// the number of multiplications.
    fn scale(self, run: &mut [C64], base: usize, control_mask: usize) -> usize {
        let keep = |i: usize| (base + i) & control_mask == control_mask;
        match self {
            Factor::One => 0,
            Factor::Neg => {
                for (i, a) in run.iter_mut().enumerate() {
                    if keep(i) {
                        *a = -*a;
                    }
                }
                0
            }
            Factor::Mul(z) => {
                let mut n = 0;
                for (i, a) in run.iter_mut().enumerate() {
                    if keep(i) {
                        *a *= z;
                        n += 1;
                    }
                }
                n
            }
        }
    }
}

pub fn apply_diag(slice: &mut [C64], op: &DiagonalOp) -> Result<()> {
    let l = local_qubits(slice)?;
    if op.control_mask >> l != 0 {
        return Err(Error::BitOutOfRange {
            bit: usize::BITS as usize - 1 - op.control_mask.leading_zeros() as usize,
            local_qubits: l,
        });
    }
    let muls = match op.target {
        DiagTarget::Fixed(bit) => {
            Factor::of(op.phases[bit as usize]).scale(slice, 0, op.control_mask)
        }
        DiagTarget::Local(t) => {
            check_bit(t, l)?;
            let stride = 1usize << t;
            let (f0, f1) = (Factor::of(op.phases[0]), Factor::of(op.phases[1]));
            let mut n = 0;
            for (ci, chunk) in slice.chunks_exact_mut(2 * stride).enumerate() {
                let base = ci * 2 * stride;
                let (lo, hi) = chunk.split_at_mut(stride);
                n += f0.scale(lo, base, op.control_mask);
                n += f1.scale(hi, base + stride, op.control_mask);
            }
            n
        }
    };
    count_muls(muls);
    Ok(())
}

/// Completes a non-local single-qubit gate after a pair exchange.
///
/// `mine` holds this rank's amplitudes, `theirs` the partner's at the same
/// offsets. `my_side` is this rank's value of the target bit. Only offsets
/// whose `control_mask` bits are all set are updated.
pub fn combine_after_exchange(
    mine: &mut [C64],
    theirs: &[C64],
    op: PairOp,
    my_side: bool,
    control_mask: usize,
) -> Result<()> {
    if mine.len() != theirs.len() {
        return Err(Error::LengthMismatch {
            expected: mine.len(),
            got: theirs.len(),
        });
    }
    let l = local_qubits(mine)?;
    if control_mask >> l != 0 {
        return Err(Error::InvalidParameter("control mask exceeds the slice"));
    }
    let keep = |i: usize| i & control_mask == control_mask;
    let pairs = mine
        .iter_mut()
        .zip(theirs)
        .enumerate()
        .filter(|(i, _)| keep(*i));
    match op {
        PairOp::X => {
            if control_mask == 0 {
                mine.copy_from_slice(theirs);
            } else {
                for (_, (m, t)) in pairs {
                    *m = *t;
                }
            }
        }
        PairOp::Y => {
            for (_, (m, t)) in pairs {
                *m = if my_side {
                    times_i(*t)
                } else {
                    times_neg_i(*t)
                };
            }
        }
        PairOp::H => {
            let mut n = 0;
            for (_, (m, t)) in pairs {
                *m = if my_side {
                    (*t - *m) * FRAC_1_SQRT_2
                } else {
                    (*m + *t) * FRAC_1_SQRT_2
                };
                n += 1;
            }
            count_muls(n);
        }
        PairOp::Matrix(u) => {
            let [[u00, u01], [u10, u11]] = u.matrix();
            let mut n = 0;
            for (_, (m, t)) in pairs {
                *m = if my_side {
                    u10 * *t + u11 * *m
                } else {
                    u00 * *m + u01 * *t
                };
                n += 2;
            }
            count_muls(n);
        }
    }
    Ok(())
}

/// Exchanges the amplitudes of two offset bits.
pub fn swap_bits_local(slice: &mut [C64], a: usize, b: usize) -> Result<()> {
    let l = local_qubits(slice)?;
    check_bit(a, l)?;
    check_bit(b, l)?;
    if a == b {
        return Err(Error::DuplicateOperand(a));
    }
    let (ma, mb) = (1usize << a, 1usize << b);
    for i in 0..slice.len() {
        // visit each |a=1, b=0> once and swap with its |a=0, b=1> partner
        if i & ma != 0 && i & mb == 0 {
            slice.swap(i, (i ^ ma) | mb);
        }
    }
    Ok(())
}

/// Dense update over `targets.len() <= 3` offset bits.
pub fn apply_dense_local(
    slice: &mut [C64],
    matrix: &DenseUnitary,
    targets: &[usize],
) -> Result<()> {
    let l = local_qubits(slice)?;
    if targets.len() != matrix.n_targets() {
        return Err(Error::LengthMismatch {
            expected: matrix.n_targets(),
            got: targets.len(),
        });
    }
    let mut mask = 0usize;
    for &t in targets {
        check_bit(t, l)?;
        if mask & (1 << t) != 0 {
            return Err(Error::DuplicateOperand(t));
        }
        mask |= 1 << t;
    }
    let dim = matrix.dim();
    let mut offsets = [0usize; 8];
    for (k, off) in offsets.iter_mut().enumerate().take(dim) {
        *off = targets
            .iter()
            .enumerate()
            .filter(|(j, _)| k >> j & 1 == 1)
            .fold(0, |acc, (_, &t)| acc | 1 << t);
    }
    let mut gathered = [C64::new(0.0, 0.0); 8];
    let mut groups = 0;
    for base in (0..slice.len()).filter(|i| i & mask == 0) {
        for k in 0..dim {
            gathered[k] = slice[base | offsets[k]];
        }
        for r in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for (c, g) in gathered.iter().enumerate().take(dim) {
                acc += matrix.get(r, c) * g;
            }
            slice[base | offsets[r]] = acc;
        }
        groups += 1;
    }
    count_muls(groups * dim * dim);
    Ok(())
}

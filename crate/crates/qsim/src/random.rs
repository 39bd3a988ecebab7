//! Random unitaries and circuits over the full gate set.

use std::f64::consts::PI;

use qsim_core::{Circuit, DenseUnitary, Gate, Unitary2, C64};
use rand::Rng;
use rand_distr::StandardNormal;

/// A `dim x dim` unitary, row-major: Gram-Schmidt on the columns of a
/// complex Gaussian matrix.
pub fn random_unitary_data<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        // Two passes keep the columns orthogonal to rounding precision.
        for _ in 0..2 {
            for u in &cols {
                let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(u) {
                    *x -= dot * a;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            data[r * dim + c] = *x;
        }
    }
    data
}

pub fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> Unitary2 {
    let d = random_unitary_data(rng, 2);
    Unitary2::new([[d[0], d[1]], [d[2], d[3]]]).expect("orthonormalized columns")
}

pub fn random_dense<R: Rng + ?Sized>(rng: &mut R, n_targets: usize) -> DenseUnitary {
    DenseUnitary::new(n_targets, random_unitary_data(rng, 1 << n_targets))
        .expect("orthonormalized columns")
}

fn distinct<R: Rng + ?Sized>(rng: &mut R, count: usize, below: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, below, count).into_vec()
}

/// One gate on `n_qubits` qubits. `DENSE` targets are drawn from qubits
/// below `dense_limit`; with `dense_limit == 0` no dense gates are drawn.
pub fn random_gate<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, dense_limit: usize) -> Gate {
    let dense_limit = dense_limit.min(n_qubits);
    loop {
        let kind = rng.random_range(0..14);
        let two = n_qubits >= 2;
        let t = rng.random_range(0..n_qubits);
        let gate = match kind {
            0 => Gate::X(t),
            1 => Gate::Y(t),
            2 => Gate::Z(t),
            3 => Gate::H(t),
            4 => Gate::S(t),
            5 => Gate::T(t),
            6 => Gate::Rz {
                target: t,
                theta: rng.random_range(-2.0 * PI..2.0 * PI),
            },
            7 => Gate::Rk {
                target: t,
                k: rng.random_range(1..=10),
            },
            8 => Gate::U1q {
                target: t,
                matrix: random_unitary2(rng),
            },
            9..=12 if two => {
                let q = distinct(rng, 2, n_qubits);
                match kind {
                    9 => Gate::Cnot {
                        control: q[0],
                        target: q[1],
                    },
                    10 => Gate::Crk {
                        control: q[0],
                        target: q[1],
                        k: rng.random_range(1..=10),
                    },
                    11 => Gate::Cu1q {
                        control: q[0],
                        target: q[1],
                        matrix: random_unitary2(rng),
                    },
                    _ => Gate::Swap(q[0], q[1]),
                }
            }
            13 if dense_limit > 0 => {
                let m = rng.random_range(1..=dense_limit.min(DenseUnitary::MAX_TARGETS));
                Gate::Dense {
                    targets: distinct(rng, m, dense_limit),
                    matrix: random_dense(rng, m),
                }
            }
            _ => continue,
        };
        return gate;
    }
}

pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
    n_gates: usize,
    dense_limit: usize,
) -> Circuit {
    let gates = (0..n_gates).map(|_| random_gate(rng, n_qubits, dense_limit));
    Circuit::from_gates(n_qubits, gates).expect("generated gates are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitaries_pass_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..=3 {
            for _ in 0..50 {
                assert_eq!(random_dense(&mut rng, m).dim(), 1 << m);
            }
        }
    }

    #[test]
    fn circuits_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..8 {
            let c = random_circuit(&mut rng, n, 200, n / 2);
            assert_eq!(c.len(), 200);
            for g in c.gates() {
                if let Gate::Dense { targets, .. } = g {
                    assert!(targets.iter().all(|&q| q < n / 2));
                }
            }
        }
    }

    #[test]
    fn every_kind_appears() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_circuit(&mut rng, 4, 2000, 2);
        let mut names: Vec<_> = c.gates().iter().map(Gate::name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), crate::format::SUPPORTED_GATES.len());
    }

    #[test]
    fn same_seed_same_circuit() {
        let a = random_circuit(&mut ChaCha8Rng::seed_from_u64(5), 6, 50, 3);
        let b = random_circuit(&mut ChaCha8Rng::seed_from_u64(5), 6, 50, 3);
        assert_eq!(a, b);
    }
}

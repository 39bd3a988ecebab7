use proptest::prelude::*;
use qsim::random::{random_circuit, random_gate};
use qsim::sim::run_simulated;
use qsim::verify::run_distributed;
use qsim_core::circuits::{build_qft, build_universal, UniversalSpec};
use qsim_core::measure::{expval_pauli_sum, norm_sq, probability, sample};
use qsim_core::oracle::{dense_expval, dft_reference, DenseState};
use qsim_core::{plan_gate, DistState, Gate, Pauli, PauliTerm, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(circuit: &qsim_core::Circuit, start: u64) -> DenseState {
    let mut d = DenseState::basis(circuit.n_qubits(), start).unwrap();
    d.apply_circuit(circuit).unwrap();
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_matches_oracle(seed in any::<u64>(), n in 2usize..9, gates in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_p = 3.min(n - 1);
        let circuit = random_circuit(&mut rng, n, gates, n - max_p);
        let start = rng.random_range(0..1u64 << n);
        let want = oracle(&circuit, start);
        for p in 0..=max_p {
            let got = run_distributed(&circuit, start, p).unwrap();
            prop_assert!(want.max_deviation(&got) <= 1e-12, "p={p}");
        }
    }
}

#[test]
fn per_gate_traffic_follows_the_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, p) = (7, 3);
    let circuit = random_circuit(&mut rng, n, 150, n - p);
    let stats = run_simulated(p, |ep| {
        let mut s = DistState::basis(n, ep, 0).unwrap();
        s.apply_circuit(&circuit).unwrap();
        s.stats()
    });
    for (rank, st) in stats.iter().enumerate() {
        let topo = Topology::new(n, p, rank).unwrap();
        for (i, gate) in circuit.gates().iter().enumerate() {
            let plan = plan_gate(&topo, gate).unwrap();
            let seen = st.gate(i as u64 + 1);
            assert_eq!(
                seen.exchanges as usize,
                plan.exchanges_on_rank(rank),
                "rank {rank} gate {i} {gate:?}"
            );
            assert_eq!(
                seen.partners,
                plan.partners_of(rank),
                "rank {rank} gate {i}"
            );
            assert_eq!(seen.bytes_sent, seen.exchanges * 16 * (1 << (n - p)));
        }
    }
}

#[test]
fn results_do_not_depend_on_rank_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 6;
    let circuit = random_circuit(&mut rng, n, 80, n - 3);
    let terms = vec![
        PauliTerm::new(0.7, [(0, Pauli::X), (5, Pauli::Y)]).unwrap(),
        PauliTerm::new(-1.3, [(2, Pauli::Z), (3, Pauli::Z)]).unwrap(),
        PauliTerm::identity(0.25),
    ];
    let per_p: Vec<_> = (0..=3)
        .map(|p| {
            run_simulated(p, |ep| {
                let mut s = DistState::basis(n, ep, 9).unwrap();
                s.apply_circuit(&circuit).unwrap();
                let probs = probability(&mut s, &[4, 0, 5]).unwrap();
                let e = expval_pauli_sum(&mut s, &terms).unwrap();
                (probs, e)
            })
            .swap_remove(0)
        })
        .collect();
    for (probs, e) in &per_p[1..] {
        let (p0, e0) = &per_p[0];
        assert!(probs.iter().zip(p0).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((e - e0).abs() < 1e-12);
    }
    let want = oracle(&circuit, 9);
    assert!((per_p[0].1 - dense_expval(&want, &terms).unwrap()).abs() < 1e-12);
}

#[test]
fn norm_is_conserved_over_long_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 10;
    let circuit = random_circuit(&mut rng, n, 10_000, n - 2);
    let norms = run_simulated(2, |ep| {
        let mut s = DistState::basis(n, ep, 3).unwrap();
        s.apply_circuit(&circuit).unwrap();
        norm_sq(&mut s).unwrap()
    });
    assert!(norms.iter().all(|x| (x - 1.0).abs() < 1e-10), "{norms:?}");
}

#[test]
fn qft_matches_the_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [3, 6, 9] {
        let qft = build_qft(n, true).unwrap();
        for _ in 0..4 {
            let x = rng.random_range(0..1u64 << n);
            let want = dft_reference(x, n).unwrap();
            for p in [0, 2] {
                let got = run_distributed(&qft, x, p).unwrap();
                let dev = got
                    .iter()
                    .zip(&want)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                assert!(dev <= 1e-10, "n={n} x={x} p={p}: {dev}");
            }
        }
    }
}

#[test]
fn universal_circuit_stays_normalized_across_ranks() {
    let n = 8;
    let circuit = build_universal(&UniversalSpec::new(n)).unwrap();
    let want = oracle(&circuit, 0);
    for p in 0..=4 {
        assert!(want.max_deviation(&run_distributed(&circuit, 0, p).unwrap()) <= 1e-12);
    }
}

#[test]
fn nonlocal_two_qubit_gates_on_every_pair() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let prep = random_circuit(&mut rng, n, 30, 2);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut c = prep.clone();
            c.push(Gate::Cnot {
                control: a,
                target: b,
            })
            .unwrap();
            c.push(random_gate(&mut rng, n, 0)).unwrap();
            c.push(Gate::Swap(a, b)).unwrap();
            c.push(Gate::Crk {
                control: a,
                target: b,
                k: 3,
            })
            .unwrap();
            let want = oracle(&c, 1);
            for p in 1..=3 {
                assert!(want.max_deviation(&run_distributed(&c, 1, p).unwrap()) <= 1e-12);
            }
        }
    }
}

#[test]
fn samples_repeat_for_fixed_seed_and_rank_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let circuit = random_circuit(&mut rng, 5, 40, 3);
    let draw = |p, seed| {
        run_simulated(p, |ep| {
            let mut s = DistState::basis(5, ep, 0).unwrap();
            s.apply_circuit(&circuit).unwrap();
            sample(&mut s, 300, seed).unwrap()
        })
    };
    for p in 0..=2 {
        let a = draw(p, 5);
        assert!(a.iter().all(|v| *v == a[0]), "ranks disagree");
        assert_eq!(a, draw(p, 5));
        assert_ne!(a[0], draw(p, 6)[0]);
    }
}

#[test]
fn sample_frequencies_fit_the_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 4;
    let circuit = random_circuit(&mut rng, n, 40, 2);
    let shots = 100_000;
    let (probs, draws) = run_simulated(2, |ep| {
        let mut s = DistState::basis(n, ep, 0).unwrap();
        s.apply_circuit(&circuit).unwrap();
        let all: Vec<usize> = (0..n).collect();
        (
            probability(&mut s, &all).unwrap(),
            sample(&mut s, shots, 99).unwrap(),
        )
    })
    .swap_remove(0);
    let mut counts = vec![0usize; 1 << n];
    for d in draws {
        counts[d as usize] += 1;
    }
    let mut chi2 = 0.0;
    let mut bins = 0;
    for (c, p) in counts.iter().zip(&probs) {
        let expected = p * shots as f64;
        if expected >= 5.0 {
            chi2 += (*c as f64 - expected).powi(2) / expected;
            bins += 1;
        } else {
            assert!((*c as f64) < expected + 30.0);
        }
    }
    // Mean bins - 1, standard deviation sqrt(2 (bins - 1)); allow six.
    let df = (bins - 1) as f64;
    assert!(
        chi2 < df + 6.0 * (2.0 * df).sqrt(),
        "chi2 {chi2} over {bins} bins"
    );
}

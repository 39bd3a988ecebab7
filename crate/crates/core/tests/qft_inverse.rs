use proptest::prelude::*;
use qsim_core::circuits::build_qft;
use qsim_core::oracle::DenseState;
use qsim_core::{Circuit, DistState, Gate, Solo};

proptest! {
    #[test]
    fn qft_then_inverse_restores_the_input(n in 1usize..9, x in any::<u64>(), theta in -3.0f64..3.0) {
        let x = x & ((1 << n) - 1);
        let mut prep = Circuit::new(n);
        for q in 0..n {
            prep.push(Gate::H(q)).unwrap();
            prep.push(Gate::Rz { target: q, theta: theta * (q + 1) as f64 }).unwrap();
        }
        let qft = build_qft(n, true).unwrap();

        let mut want = DenseState::basis(n, x).unwrap();
        want.apply_circuit(&prep).unwrap();

        let mut s = DistState::basis(n, Solo::new(), x).unwrap();
        s.apply_circuit(&prep).unwrap();
        s.apply_circuit(&qft).unwrap();
        s.apply_circuit(&qft.inverse()).unwrap();
        prop_assert!(want.max_deviation(s.amplitudes()) <= 1e-10);
    }
}

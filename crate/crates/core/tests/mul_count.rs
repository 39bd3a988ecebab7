//! Kept in its own binary: the counter is process-wide, so parallel tests
//! in the same process would disturb it.

use qsim_core::kernels::mul_count;
use qsim_core::{DistState, Gate, Solo, Unitary2};

#[test]
#[cfg(debug_assertions)]
fn x_is_a_pure_permutation_and_u1q_is_not() {
    let mut state = DistState::basis(10, Solo::new(), 5).unwrap();
    let before = mul_count();
    for t in 0..10 {
        state.apply_gate(&Gate::X(t)).unwrap();
        state.apply_gate(&Gate::Y(t)).unwrap();
        state
            .apply_gate(&Gate::Cnot {
                control: t,
                target: (t + 1) % 10,
            })
            .unwrap();
        state.apply_gate(&Gate::Z(t)).unwrap();
    }
    assert_eq!(mul_count(), before);

    state
        .apply_gate(&Gate::U1q {
            target: 3,
            matrix: Unitary2::pauli_x(),
        })
        .unwrap();
    assert_eq!(mul_count() - before, 4 * 512);
}

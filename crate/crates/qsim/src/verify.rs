//! Differential check of the distributed engine against the dense oracle.
//!
//! Random circuits are run from random basis states on every rank count
//! the width allows and the gathered result is compared with a dense
//! single-process simulation. The first failure is shrunk to a small
//! reproduction. Everything is derived from the seed, so reports are
//! byte-identical across runs.

use std::fmt::Write as _;

use qsim_core::oracle::DenseState;
use qsim_core::{Circuit, DistState, Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::format::render_circuit;
use crate::random::random_circuit;
use crate::sim::run_simulated;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub n_circuits: usize,
    /// Widths are drawn from `2..=max_qubits`.
    pub max_qubits: usize,
    pub max_log_ranks: usize,
    pub max_gates: usize,
    pub tolerance: f64,
    /// Corrupts multi-rank results to check that failures are caught.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_circuits: 200,
            max_qubits: 12,
            max_log_ranks: 4,
            max_gates: 80,
            tolerance: DEFAULT_TOLERANCE,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub circuit_index: usize,
    pub log_ranks: usize,
    pub start: u64,
    /// `None` when the engine returned an error.
    pub deviation: Option<f64>,
    pub error: Option<String>,
    pub reproduction: Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub comparisons: usize,
    pub max_deviation: f64,
    pub failure: Option<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "seed: {}", c.seed);
        let _ = writeln!(out, "circuits: {}", c.n_circuits);
        let _ = writeln!(out, "qubits: 2..={}", c.max_qubits);
        let _ = writeln!(out, "max ranks_log2: {}", c.max_log_ranks);
        let _ = writeln!(out, "max gates: {}", c.max_gates);
        let _ = writeln!(out, "comparisons: {}", self.comparisons);
        let _ = writeln!(out, "max deviation: {:.3e}", self.max_deviation);
        let _ = writeln!(out, "tolerance: {:.1e}", c.tolerance);
        match &self.failure {
            None => out.push_str("status: PASS\n"),
            Some(f) => {
                out.push_str("status: FAIL\n");
                let _ = writeln!(out, "failing circuit: {}", f.circuit_index);
                let _ = writeln!(out, "ranks_log2: {}", f.log_ranks);
                let _ = writeln!(out, "start state: {}", f.start);
                match (&f.error, f.deviation) {
                    (Some(e), _) => {
                        let _ = writeln!(out, "error: {e}");
                    }
                    (None, Some(d)) => {
                        let _ = writeln!(out, "deviation: {d:.3e}");
                    }
                    (None, None) => {}
                }
                let _ = writeln!(out, "reproduction ({} gates):", f.reproduction.len());
                out.push_str(&render_circuit(&f.reproduction));
            }
        }
        out
    }
}

enum Outcome {
    Deviation(f64),
    Error(String),
}

/// Runs `circuit` from `|start>` on `2^log_ranks` simulated ranks and
/// returns the gathered state.
pub fn run_distributed(circuit: &Circuit, start: u64, log_ranks: usize) -> Result<Vec<C64>, Error> {
    let mut results = run_simulated(log_ranks, |ep| {
        let mut state = DistState::basis(circuit.n_qubits(), ep, start)?;
        state.apply_circuit(circuit)?;
        state.gather_full_state()
    });
    results.swap_remove(0)
}

fn compare(
    circuit: &Circuit,
    start: u64,
    log_ranks: usize,
    tolerance: f64,
    fault: bool,
) -> (Outcome, bool) {
    let outcome = (|| {
        let mut got = run_distributed(circuit, start, log_ranks)?;
        if fault && log_ranks > 0 {
            let worst = (0..got.len())
                .max_by(|&a, &b| got[a].norm_sqr().total_cmp(&got[b].norm_sqr()))
                .expect("non-empty state");
            got[worst] = -got[worst];
        }
        let mut oracle = DenseState::basis(circuit.n_qubits(), start)?;
        oracle.apply_circuit(circuit)?;
        Ok::<_, Error>(oracle.max_deviation(&got))
    })();
    match outcome {
        Ok(d) => (Outcome::Deviation(d), d.is_nan() || d > tolerance),
        Err(e) => (Outcome::Error(e.to_string()), true),
    }
}

/// Shortest failing prefix, then greedy single-gate deletion.
fn minimize(circuit: &Circuit, fails: impl Fn(&Circuit) -> bool) -> Circuit {
    let n = circuit.len();
    let prefix_len = (0..=n)
        .find(|&len| fails(&circuit.select(|i| i < len)))
        .unwrap_or(n);
    let mut current = circuit.select(|i| i < prefix_len);
    let mut i = current.len();
    while i > 0 {
        i -= 1;
        let candidate = current.select(|j| j != i);
        if fails(&candidate) {
            current = candidate;
        }
    }
    current
}

pub fn verify(config: &VerifyConfig) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut comparisons = 0;
    let mut max_deviation = 0.0f64;
    let max_qubits = config.max_qubits.max(2);
    for index in 0..config.n_circuits {
        let n = rng.random_range(2..=max_qubits);
        let max_p = config.max_log_ranks.min(n - 1);
        let n_gates = rng.random_range(1..=config.max_gates.max(1));
        let circuit = random_circuit(&mut rng, n, n_gates, n - max_p);
        let start = rng.random_range(0..1u64 << n);
        for p in 0..=max_p {
            comparisons += 1;
            let (outcome, failed) =
                compare(&circuit, start, p, config.tolerance, config.inject_fault);
            if let Outcome::Deviation(d) = outcome {
                max_deviation = max_deviation.max(d);
            }
            if !failed {
                continue;
            }
            let reproduction = minimize(&circuit, |c| {
                compare(c, start, p, config.tolerance, config.inject_fault).1
            });
            let (deviation, error) = match compare(
                &reproduction,
                start,
                p,
                config.tolerance,
                config.inject_fault,
            )
            .0
            {
                Outcome::Deviation(d) => (Some(d), None),
                Outcome::Error(e) => (None, Some(e)),
            };
            return VerifyReport {
                config: config.clone(),
                comparisons,
                max_deviation,
                failure: Some(Failure {
                    circuit_index: index,
                    log_ranks: p,
                    start,
                    deviation,
                    error,
                    reproduction,
                }),
            };
        }
    }
    VerifyReport {
        config: config.clone(),
        comparisons,
        max_deviation,
        failure: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim_core::Gate;

    fn small() -> VerifyConfig {
        VerifyConfig {
            seed: 17,
            n_circuits: 12,
            max_qubits: 6,
            max_log_ranks: 3,
            max_gates: 30,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn clean_run_passes() {
        let report = verify(&small());
        assert!(report.passed(), "{}", report.render());
        assert!(report.comparisons >= 12);
        assert!(report.render().contains("status: PASS"));
    }

    #[test]
    fn injected_fault_is_caught_and_shrunk() {
        let report = verify(&VerifyConfig {
            inject_fault: true,
            ..small()
        });
        let f = report.failure.as_ref().expect("fault detected");
        assert!(f.log_ranks > 0);
        assert!(f.reproduction.is_empty());
        assert!(report.render().contains("status: FAIL"));
    }

    #[test]
    fn minimize_keeps_a_failing_core() {
        let c = Circuit::from_gates(
            3,
            [Gate::H(0), Gate::X(2), Gate::Z(1), Gate::X(2), Gate::T(0)],
        )
        .unwrap();
        let has_t = |c: &Circuit| c.gates().iter().any(|g| matches!(g, Gate::T(_)));
        let m = minimize(&c, has_t);
        assert_eq!(m.gates(), &[Gate::T(0)]);
    }

    #[test]
    fn reports_are_reproducible() {
        assert_eq!(verify(&small()).render(), verify(&small()).render());
    }
}

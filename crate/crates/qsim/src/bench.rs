//! Per-gate timing and traffic sweeps.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use qsim_core::{DistState, Error, Gate, Transport, Unitary2};

use crate::world::{run_world, Backend};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchGate {
    X,
    Z,
    H,
    /// `CRK` with `k = 2`.
    Crk,
    Cnot,
    /// Pauli-X supplied as a general matrix, forcing the generic kernel.
    U1q,
}

impl BenchGate {
    pub const ALL: [BenchGate; 6] = [
        BenchGate::X,
        BenchGate::Z,
        BenchGate::H,
        BenchGate::U1q,
        BenchGate::Cnot,
        BenchGate::Crk,
    ];

    pub fn is_controlled(self) -> bool {
        matches!(self, BenchGate::Cnot | BenchGate::Crk)
    }

    pub fn gate(self, target: usize, control: Option<usize>) -> Gate {
        let control = control.unwrap_or(0);
        match self {
            BenchGate::X => Gate::X(target),
            BenchGate::Z => Gate::Z(target),
            BenchGate::H => Gate::H(target),
            BenchGate::U1q => Gate::U1q {
                target,
                matrix: Unitary2::pauli_x(),
            },
            BenchGate::Cnot => Gate::Cnot { control, target },
            BenchGate::Crk => Gate::Crk {
                control,
                target,
                k: 2,
            },
        }
    }
}

impl FromStr for BenchGate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "X" => BenchGate::X,
            "Z" => BenchGate::Z,
            "H" => BenchGate::H,
            "U1Q" => BenchGate::U1q,
            "CNOT" => BenchGate::Cnot,
            "CRK" => BenchGate::Crk,
            other => {
                return Err(format!(
                    "unknown benchmark gate '{other}' (expected X, Z, H, U1Q, CNOT or CRK)"
                ))
            }
        })
    }
}

impl fmt::Display for BenchGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchGate::X => "X",
            BenchGate::Z => "Z",
            BenchGate::H => "H",
            BenchGate::U1q => "U1Q",
            BenchGate::Cnot => "CNOT",
            BenchGate::Crk => "CRK",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n_qubits: usize,
    pub log_ranks: usize,
    pub gates: Vec<BenchGate>,
    /// Targets to sweep; all qubits when `None`.
    pub targets: Option<Vec<usize>>,
    /// Controls to sweep for controlled gates; all other qubits when `None`.
    pub controls: Option<Vec<usize>>,
    pub reps: usize,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.log_ranks >= self.n_qubits {
            return Err(format!(
                "{} qubits cannot be split over 2^{} ranks; at least one qubit must stay local",
                self.n_qubits, self.log_ranks
            ));
        }
        let lists = [("target", &self.targets), ("control", &self.controls)];
        for (what, list) in lists {
            if let Some(&q) = list.iter().flatten().find(|&&q| q >= self.n_qubits) {
                return Err(format!("{what} {q} is outside 0..{}", self.n_qubits));
            }
        }
        if self.gates.is_empty() {
            return Err("no gates to benchmark".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub gate: BenchGate,
    pub n_qubits: usize,
    pub log_ranks: usize,
    pub target: usize,
    pub control: Option<usize>,
    /// Median over repetitions of the slowest rank's time.
    pub wall_seconds: f64,
    /// Largest per-rank count for one application.
    pub exchanges: u64,
    pub bytes: u64,
}

pub const CSV_HEADER: &str = "gate,N,p,q_T,q_C,wall_seconds,exchanges,bytes";

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let control = r.control.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{},{}",
            r.gate,
            r.n_qubits,
            r.log_ranks,
            r.target,
            control,
            r.wall_seconds,
            r.exchanges,
            r.bytes
        );
    }
    out
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median wall time of `reps` applications of `gate` after one warm-up,
/// measured on this rank.
pub fn time_gate<T: Transport>(
    state: &mut DistState<T>,
    gate: &Gate,
    reps: usize,
) -> Result<f64, Error> {
    state.apply_gate(gate)?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        state.apply_gate(gate)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(median(&mut times))
}

fn cases(cfg: &BenchConfig) -> Vec<(BenchGate, usize, Option<usize>)> {
    let all: Vec<usize> = (0..cfg.n_qubits).collect();
    let targets = cfg.targets.clone().unwrap_or_else(|| all.clone());
    let controls = cfg.controls.clone().unwrap_or(all);
    let mut out = Vec::new();
    for &g in &cfg.gates {
        for &t in &targets {
            if g.is_controlled() {
                out.extend(
                    controls
                        .iter()
                        .filter(|&&c| c != t)
                        .map(|&c| (g, t, Some(c))),
                );
            } else {
                out.push((g, t, None));
            }
        }
    }
    out
}

/// Slowest rank's time and largest per-rank traffic of one application.
fn bench_case<T: Transport>(
    state: &mut DistState<T>,
    gate: &Gate,
    reps: usize,
) -> Result<(f64, u64, u64), Error> {
    let before = state.stats();
    state.apply_gate(gate)?;
    let after = state.stats();
    let exchanges = after.exchanges - before.exchanges;
    let bytes = after.bytes_sent - before.bytes_sent;

    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        state.apply_gate(gate)?;
        let mut t = vec![0.0; state.topology().n_ranks()];
        t[state.topology().rank()] = start.elapsed().as_secs_f64();
        state.allreduce_sum(&mut t)?;
        times.push(t.into_iter().fold(0.0, f64::max));
    }

    let n = state.topology().n_ranks();
    let rank = state.topology().rank();
    let mut traffic = vec![0.0; 2 * n];
    traffic[2 * rank] = exchanges as f64;
    traffic[2 * rank + 1] = bytes as f64;
    state.allreduce_sum(&mut traffic)?;
    let max_of = |k: usize| {
        traffic
            .iter()
            .skip(k)
            .step_by(2)
            .fold(0.0, |a: f64, &b| a.max(b)) as u64
    };
    Ok((median(&mut times), max_of(0), max_of(1)))
}

/// Runs the sweep; rows are returned by the process hosting rank 0.
pub fn run_bench(backend: Backend, cfg: &BenchConfig) -> Result<Option<Vec<BenchRow>>, Error> {
    let cases = cases(cfg);
    let out = run_world(backend, cfg.log_ranks, |ep| {
        let mut state = DistState::basis(cfg.n_qubits, ep, 0)?;
        let mut rows = Vec::with_capacity(cases.len());
        for &(g, target, control) in &cases {
            let gate = g.gate(target, control);
            let (wall_seconds, exchanges, bytes) = bench_case(&mut state, &gate, cfg.reps)?;
            rows.push(BenchRow {
                gate: g,
                n_qubits: cfg.n_qubits,
                log_ranks: cfg.log_ranks,
                target,
                control,
                wall_seconds,
                exchanges,
                bytes,
            });
        }
        Ok::<_, Error>(rows)
    })?;
    let mut root = None;
    for (rank, result) in out.results {
        let rows = result?;
        if rank == 0 {
            root = Some(rows);
        }
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traffic_matches_locality() {
        let cfg = BenchConfig {
            n_qubits: 6,
            log_ranks: 2,
            gates: BenchGate::ALL.to_vec(),
            targets: None,
            controls: None,
            reps: 1,
        };
        let rows = run_bench(Backend::Simulated, &cfg).unwrap().unwrap();
        let slice_bytes = 16u64 << 4;
        for r in &rows {
            let nonlocal_target = r.target >= 4;
            let expect = match r.gate {
                BenchGate::Z | BenchGate::Crk => 0,
                _ => u64::from(nonlocal_target),
            };
            assert_eq!(r.exchanges, expect, "{r:?}");
            assert_eq!(r.bytes, expect * slice_bytes, "{r:?}");
            assert!(r.wall_seconds >= 0.0);
        }
        let per_gate = 6 * 4 + 2 * 6 * 5;
        assert_eq!(rows.len(), per_gate);
    }

    #[test]
    fn csv_layout() {
        let row = BenchRow {
            gate: BenchGate::Cnot,
            n_qubits: 10,
            log_ranks: 2,
            target: 9,
            control: Some(1),
            wall_seconds: 0.25,
            exchanges: 1,
            bytes: 4096,
        };
        let csv = render_csv(&[row]);
        assert_eq!(
            csv,
            format!("{CSV_HEADER}\nCNOT,10,2,9,1,2.500000e-1,1,4096\n")
        );
    }

    #[test]
    fn sweep_ranges_are_checked() {
        let mut cfg = BenchConfig {
            n_qubits: 4,
            log_ranks: 1,
            gates: vec![BenchGate::X],
            targets: Some(vec![0, 3]),
            controls: None,
            reps: 5,
        };
        assert!(cfg.validate().is_ok());
        cfg.targets = Some(vec![4]);
        assert!(cfg.validate().unwrap_err().contains("target 4"));
        cfg.targets = None;
        cfg.log_ranks = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn names_round_trip() {
        for g in BenchGate::ALL {
            assert_eq!(g.to_string().parse::<BenchGate>().unwrap(), g);
        }
    }
}

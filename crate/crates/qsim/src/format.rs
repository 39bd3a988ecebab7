//! Line-oriented text formats for circuits and Pauli sums.
//!
//! Circuit files start with `qubits <N>` and then hold one gate per line:
//!
//! ```text
//! # Bell pair
//! qubits 2
//! H 0
//! CNOT 0 1
//! ```
//!
//! Operands come first, then parameters: `RZ t theta`, `RK t k`,
//! `CRK c t k`, `U1Q t` followed by the eight real numbers
//! `re00 im00 re01 im01 re10 im10 re11 im11`, `CU1Q c t` plus the same
//! eight, and `DENSE m t1 .. tm` followed by the `2^m x 2^m` matrix as
//! `2 * 4^m` row-major `(re, im)` values. `#` starts a comment.
//!
//! Pauli sums hold one term per line, `<coeff> <P q> [<P q> ...]`, with
//! `P` one of `X`, `Y`, `Z` or `I`; a bare coefficient is a multiple of the
//! identity.

use std::fmt::Write as _;

use qsim_core::{Circuit, DenseUnitary, Gate, Pauli, PauliTerm, Unitary2, C64};

pub const SUPPORTED_GATES: &[&str] = &[
    "X", "Y", "Z", "H", "S", "T", "RZ", "RK", "U1Q", "CNOT", "CRK", "CU1Q", "SWAP", "DENSE",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct FormatError {
    pub line: usize,
    pub kind: FormatErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatErrorKind {
    #[error("expected `qubits <N>` before the first gate")]
    MissingHeader,
    #[error("duplicate `qubits` line")]
    DuplicateHeader,
    #[error("unknown gate '{0}'; supported gates: {list}", list = SUPPORTED_GATES.join(", "))]
    UnknownGate(String),
    #[error("{gate} expects {expected} arguments, got {got}")]
    Arity {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("'{0}' is not a valid number")]
    BadNumber(String),
    #[error("unknown Pauli factor '{0}'")]
    UnknownPauli(String),
    #[error(transparent)]
    Invalid(#[from] qsim_core::Error),
}

type Kind = FormatErrorKind;

fn number<T: std::str::FromStr>(tok: &str) -> Result<T, Kind> {
    tok.parse().map_err(|_| Kind::BadNumber(tok.to_string()))
}

fn k_param(x: f64) -> Result<u32, Kind> {
    if x.fract() != 0.0 || x < 1.0 || x > u32::MAX as f64 {
        return Err(Kind::BadNumber(x.to_string()));
    }
    Ok(x as u32)
}

fn unitary2(p: &[f64]) -> Result<Unitary2, Kind> {
    let c = |i: usize| C64::new(p[2 * i], p[2 * i + 1]);
    Ok(Unitary2::new([[c(0), c(1)], [c(2), c(3)]])?)
}

/// Builds a gate from its name, qubit operands, and real parameters.
pub fn gate_from_parts(
    name: &str,
    qubits: &[usize],
    params: &[f64],
) -> Result<Gate, FormatErrorKind> {
    let upper = name.to_ascii_uppercase();
    let (n_q, n_p) = match upper.as_str() {
        "X" | "Y" | "Z" | "H" | "S" | "T" => (1, 0),
        "RZ" | "RK" => (1, 1),
        "U1Q" => (1, 8),
        "CNOT" | "SWAP" => (2, 0),
        "CRK" => (2, 1),
        "CU1Q" => (2, 8),
        "DENSE" => (qubits.len(), 2 << (2 * qubits.len())),
        _ => return Err(Kind::UnknownGate(name.to_string())),
    };
    if upper == "DENSE" && !(1..=DenseUnitary::MAX_TARGETS).contains(&qubits.len()) {
        return Err(qsim_core::Error::InvalidParameter("dense gates act on 1 to 3 qubits").into());
    }
    if qubits.len() != n_q || params.len() != n_p {
        return Err(Kind::Arity {
            gate: upper,
            expected: n_q + n_p,
            got: qubits.len() + params.len(),
        });
    }
    let q = |i: usize| qubits[i];
    Ok(match upper.as_str() {
        "X" => Gate::X(q(0)),
        "Y" => Gate::Y(q(0)),
        "Z" => Gate::Z(q(0)),
        "H" => Gate::H(q(0)),
        "S" => Gate::S(q(0)),
        "T" => Gate::T(q(0)),
        "RZ" => Gate::Rz {
            target: q(0),
            theta: params[0],
        },
        "RK" => Gate::Rk {
            target: q(0),
            k: k_param(params[0])?,
        },
        "U1Q" => Gate::U1q {
            target: q(0),
            matrix: unitary2(params)?,
        },
        "CNOT" => Gate::Cnot {
            control: q(0),
            target: q(1),
        },
        "SWAP" => Gate::Swap(q(0), q(1)),
        "CRK" => Gate::Crk {
            control: q(0),
            target: q(1),
            k: k_param(params[0])?,
        },
        "CU1Q" => Gate::Cu1q {
            control: q(0),
            target: q(1),
            matrix: unitary2(params)?,
        },
        _ => Gate::Dense {
            targets: qubits.to_vec(),
            matrix: DenseUnitary::new(
                qubits.len(),
                params
                    .chunks_exact(2)
                    .map(|c| C64::new(c[0], c[1]))
                    .collect(),
            )?,
        },
    })
}

fn gate_from_tokens(name: &str, args: &[&str]) -> Result<Gate, Kind> {
    let upper = name.to_ascii_uppercase();
    let n_q = match upper.as_str() {
        "X" | "Y" | "Z" | "H" | "S" | "T" | "RZ" | "RK" | "U1Q" => 1,
        "CNOT" | "SWAP" | "CRK" | "CU1Q" => 2,
        "DENSE" => {
            let m: usize = number(args.first().ok_or(Kind::Arity {
                gate: upper.clone(),
                expected: 1,
                got: 0,
            })?)?;
            let qubits = args[1..]
                .iter()
                .take(m)
                .map(|t| number(t))
                .collect::<Result<Vec<usize>, _>>()?;
            let params = args[1 + qubits.len()..]
                .iter()
                .map(|t| number(t))
                .collect::<Result<Vec<f64>, _>>()?;
            if qubits.len() != m {
                return Err(Kind::Arity {
                    gate: upper,
                    expected: 1 + m,
                    got: args.len(),
                });
            }
            return gate_from_parts(name, &qubits, &params);
        }
        _ => return Err(Kind::UnknownGate(name.to_string())),
    };
    let split = n_q.min(args.len());
    let qubits = args[..split]
        .iter()
        .map(|t| number(t))
        .collect::<Result<Vec<usize>, _>>()?;
    let params = args[split..]
        .iter()
        .map(|t| number(t))
        .collect::<Result<Vec<f64>, _>>()?;
    gate_from_parts(name, &qubits, &params)
}

/// Non-empty, comment-stripped lines with 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

pub fn parse_circuit(text: &str) -> Result<Circuit, FormatError> {
    let mut circuit: Option<Circuit> = None;
    let mut last_line = 0;
    for (line, toks) in content_lines(text) {
        last_line = line;
        let err = |kind| FormatError { line, kind };
        if toks[0].eq_ignore_ascii_case("qubits") {
            if circuit.is_some() {
                return Err(err(Kind::DuplicateHeader));
            }
            if toks.len() != 2 {
                return Err(err(Kind::Arity {
                    gate: "qubits".into(),
                    expected: 1,
                    got: toks.len() - 1,
                }));
            }
            circuit = Some(Circuit::new(number(toks[1]).map_err(err)?));
            continue;
        }
        let c = circuit.as_mut().ok_or(err(Kind::MissingHeader))?;
        let gate = gate_from_tokens(toks[0], &toks[1..]).map_err(err)?;
        c.push(gate).map_err(|e| err(e.into()))?;
    }
    circuit.ok_or(FormatError {
        line: last_line.max(1),
        kind: Kind::MissingHeader,
    })
}

fn push_matrix(out: &mut String, values: impl IntoIterator<Item = C64>) {
    for v in values {
        let _ = write!(out, " {} {}", v.re, v.im);
    }
}

pub fn render_gate(gate: &Gate) -> String {
    let mut out = String::from(gate.name());
    let qubits = gate.qubits();
    if let Gate::Dense { targets, .. } = gate {
        let _ = write!(out, " {}", targets.len());
    }
    for q in &qubits {
        let _ = write!(out, " {q}");
    }
    match gate {
        Gate::Rz { theta, .. } => {
            let _ = write!(out, " {theta}");
        }
        Gate::Rk { k, .. } | Gate::Crk { k, .. } => {
            let _ = write!(out, " {k}");
        }
        Gate::U1q { matrix, .. } | Gate::Cu1q { matrix, .. } => {
            push_matrix(&mut out, matrix.matrix().into_iter().flatten());
        }
        Gate::Dense { matrix, .. } => push_matrix(&mut out, matrix.data().iter().copied()),
        _ => {}
    }
    out
}

/// Text form of `circuit`; [`parse_circuit`] reads it back exactly.
pub fn render_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\n", circuit.n_qubits());
    for g in circuit.gates() {
        out.push_str(&render_gate(g));
        out.push('\n');
    }
    out
}

pub fn parse_pauli_sum(text: &str) -> Result<Vec<PauliTerm>, FormatError> {
    let mut terms = Vec::new();
    for (line, toks) in content_lines(text) {
        let err = |kind| FormatError { line, kind };
        let coefficient: f64 = number(toks[0]).map_err(err)?;
        let rest = &toks[1..];
        if rest.len() % 2 != 0 {
            return Err(err(Kind::Arity {
                gate: "Pauli term".into(),
                expected: rest.len() + 1,
                got: rest.len(),
            }));
        }
        let mut factors = Vec::new();
        for pair in rest.chunks_exact(2) {
            let q: usize = number(pair[1]).map_err(err)?;
            let p = match pair[0].to_ascii_uppercase().as_str() {
                "X" => Pauli::X,
                "Y" => Pauli::Y,
                "Z" => Pauli::Z,
                "I" => continue,
                other => return Err(err(Kind::UnknownPauli(other.to_string()))),
            };
            factors.push((q, p));
        }
        terms.push(PauliTerm::new(coefficient, factors).map_err(|e| err(e.into()))?);
    }
    Ok(terms)
}

pub fn render_pauli_sum(terms: &[PauliTerm]) -> String {
    let mut out = String::new();
    for t in terms {
        let _ = write!(out, "{}", t.coefficient());
        for (q, p) in t.factors() {
            let _ = write!(out, " {p:?} {q}");
        }
        out.push('\n');
    }
    out
}

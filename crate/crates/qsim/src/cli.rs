//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 input errors (usage,
//! unreadable or malformed files), 3 engine errors, 4 transport errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsim_core::circuits::{build_ghz, build_qft, build_universal, UniversalSpec};
use qsim_core::measure::{expval_pauli_sum, probability, sample};
use qsim_core::{Circuit, DistState, Error, PauliTerm, TransportError};

use crate::bench::{render_csv, run_bench, BenchConfig, BenchGate};
use crate::format::{parse_circuit, parse_pauli_sum, render_circuit, FormatError};
use crate::verify::{verify, VerifyConfig};
use crate::world::{run_world, Backend};

#[derive(Debug, Parser)]
#[command(
    name = "qsim",
    version,
    about = "Distributed state-vector quantum circuit simulator"
)]
pub struct Cli {
    /// Communication backend: simulated or external. Defaults to $QSIM_TRANSPORT, then simulated.
    #[arg(long, global = true)]
    pub transport: Option<Backend>,
    /// Split the state over 2^p ranks.
    #[arg(long = "ranks-log2", short = 'p', global = true, default_value_t = 0)]
    pub ranks_log2: usize,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Timed repetitions per benchmark case.
    #[arg(long, global = true, default_value_t = 5)]
    pub reps: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a circuit file and report a measurement.
    Run(RunArgs),
    /// Time single gates over targets and controls; prints CSV.
    Bench(BenchArgs),
    /// Compare the engine against the dense reference on random circuits.
    Verify(VerifyArgs),
    /// Print the quantum Fourier transform circuit.
    Qft {
        n_qubits: usize,
        /// Append the final qubit-reversal swaps.
        #[arg(long)]
        swaps: bool,
    },
    /// Print the layered rotation/CNOT benchmark circuit.
    Universal { n_qubits: usize },
    /// Print a GHZ preparation circuit.
    Ghz { n_qubits: usize },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub circuit: PathBuf,
    /// probs[:q,q,..] | expval:<pauli file> | samples:<shots>[,<seed>] | state
    #[arg(long, default_value = "probs")]
    pub output: String,
    /// Initial basis state index.
    #[arg(long, default_value_t = 0)]
    pub start: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub qubits: usize,
    #[arg(long, value_delimiter = ',', default_values_t = BenchGate::ALL)]
    pub gates: Vec<BenchGate>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub controls: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub circuits: usize,
    #[arg(long, default_value_t = 12)]
    pub max_qubits: usize,
    #[arg(long, default_value_t = 80)]
    pub max_gates: usize,
    /// Largest ranks_log2 compared; defaults to --ranks-log2 if nonzero, else 4.
    #[arg(long)]
    pub max_ranks_log2: Option<usize>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputSpec {
    Probs(Option<Vec<usize>>),
    Expval(PathBuf),
    Samples { shots: usize, seed: Option<u64> },
    State,
}

impl std::str::FromStr for OutputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let bad = |what: &str| format!("invalid {what} in output '{s}'");
        match (kind, arg) {
            ("probs", None) => Ok(OutputSpec::Probs(None)),
            ("probs", Some(a)) => a
                .split(',')
                .map(|q| q.trim().parse().map_err(|_| bad("qubit")))
                .collect::<Result<_, _>>()
                .map(|v| OutputSpec::Probs(Some(v))),
            ("expval", Some(a)) if !a.is_empty() => Ok(OutputSpec::Expval(a.into())),
            ("samples", Some(a)) => {
                let (shots, seed) = match a.split_once(',') {
                    Some((n, s)) => (n, Some(s.trim().parse().map_err(|_| bad("seed"))?)),
                    None => (a, None),
                };
                let shots = shots.trim().parse().map_err(|_| bad("shot count"))?;
                Ok(OutputSpec::Samples { shots, seed })
            }
            ("state", None) => Ok(OutputSpec::State),
            _ => Err(format!(
                "unknown output '{s}' (expected probs[:qubits], expval:<file>, samples:<shots>[,<seed>] or state)"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Format { path: String, source: FormatError },
    #[error(transparent)]
    Engine(Error),
    #[error("{0}")]
    Transport(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Transport(_) => CliError::Transport(e.to_string()),
            _ => CliError::Engine(e),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        CliError::Transport(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Format { .. } => 2,
            CliError::Engine(_) => 3,
            CliError::Transport(_) => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    parse_circuit(&read(path)?).map_err(|source| CliError::Format {
        path: path.display().to_string(),
        source,
    })
}

fn load_terms(path: &Path) -> Result<Vec<PauliTerm>, CliError> {
    parse_pauli_sum(&read(path)?).map_err(|source| CliError::Format {
        path: path.display().to_string(),
        source,
    })
}

/// Bit string of `value` over `width` positions, position 0 leftmost.
fn bits(value: u64, width: usize) -> String {
    (0..width)
        .map(|j| if value >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Fixed precision, so output is identical for every rank count.
fn fixed(x: f64) -> String {
    let s = format!("{x:.12}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// CSV table of outcome bits and probabilities.
pub fn render_probs(probs: &[f64], width: usize) -> String {
    let mut out = String::from("outcome,probability\n");
    for (i, p) in probs.iter().enumerate() {
        let _ = writeln!(out, "{},{}", bits(i as u64, width), fixed(*p));
    }
    out
}

fn run_circuit(cli: &Cli, backend: Backend, args: &RunArgs) -> Result<Option<String>, CliError> {
    let spec: OutputSpec = args.output.parse().map_err(CliError::Usage)?;
    let circuit = load_circuit(&args.circuit)?;
    let n = circuit.n_qubits();
    let terms = match &spec {
        OutputSpec::Expval(path) => load_terms(path)?,
        _ => Vec::new(),
    };
    let out = run_world(backend, cli.ranks_log2, |ep| {
        let mut state = DistState::basis(n, ep, args.start)?;
        state.apply_circuit(&circuit)?;
        let text = match &spec {
            OutputSpec::Probs(subset) => {
                let subset = subset.clone().unwrap_or_else(|| (0..n).collect());
                render_probs(&probability(&mut state, &subset)?, subset.len())
            }
            OutputSpec::Expval(_) => {
                format!("expval\n{}\n", fixed(expval_pauli_sum(&mut state, &terms)?))
            }
            OutputSpec::Samples { shots, seed } => {
                let draws = sample(&mut state, *shots, seed.unwrap_or(cli.seed))?;
                let mut out = String::from("shot,outcome\n");
                for (k, &x) in draws.iter().enumerate() {
                    let _ = writeln!(out, "{k},{}", bits(x, n));
                }
                out
            }
            OutputSpec::State => {
                let full = state.gather_full_state()?;
                let mut out = String::from("outcome,re,im\n");
                for (i, a) in full.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{}", bits(i as u64, n), fixed(a.re), fixed(a.im));
                }
                out
            }
        };
        Ok::<_, Error>(text)
    })?;
    let mut root = None;
    for (rank, result) in out.results {
        let text = result?;
        if rank == 0 {
            root = Some(text);
        }
    }
    Ok(root)
}

/// Runs a parsed command line. Returns text to emit, or `None` on ranks
/// other than 0, plus whether a verification passed.
fn dispatch(cli: &Cli) -> Result<(Option<String>, bool), CliError> {
    let backend = Backend::resolve(cli.transport).map_err(CliError::Usage)?;
    let text = match &cli.command {
        Command::Run(args) => run_circuit(cli, backend, args)?,
        Command::Bench(args) => {
            let cfg = BenchConfig {
                n_qubits: args.qubits,
                log_ranks: cli.ranks_log2,
                gates: args.gates.clone(),
                targets: args.targets.clone(),
                controls: args.controls.clone(),
                reps: cli.reps,
            };
            cfg.validate().map_err(CliError::Usage)?;
            run_bench(backend, &cfg)?.map(|rows| render_csv(&rows))
        }
        Command::Verify(args) => {
            if backend != Backend::Simulated {
                return Err(CliError::Usage(
                    "verify runs every rank count in-process; use the simulated transport".into(),
                ));
            }
            let max_log_ranks = args.max_ranks_log2.unwrap_or(if cli.ranks_log2 > 0 {
                cli.ranks_log2
            } else {
                4
            });
            let report = verify(&VerifyConfig {
                seed: cli.seed,
                n_circuits: args.circuits,
                max_qubits: args.max_qubits,
                max_log_ranks,
                max_gates: args.max_gates,
                inject_fault: args.inject_fault,
                ..VerifyConfig::default()
            });
            return Ok((Some(report.render()), report.passed()));
        }
        Command::Qft { n_qubits, swaps } => Some(render_circuit(&build_qft(*n_qubits, *swaps)?)),
        Command::Universal { n_qubits } => Some(render_circuit(&build_universal(
            &UniversalSpec::new(*n_qubits),
        )?)),
        Command::Ghz { n_qubits } => Some(render_circuit(&build_ghz(*n_qubits)?)),
    };
    Ok((text, true))
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = dispatch(&cli).and_then(|(text, passed)| {
        if let Some(text) = text {
            emit(&cli, &text)?;
        }
        Ok(passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Backend selection and SPMD execution.

use std::fmt;
use std::str::FromStr;

use qsim_core::TransportError;

use crate::link::Endpoint;
use crate::sim::run_simulated;
use crate::tcp::{io_timeout_from_env, TcpConfig, TcpLink, DEFAULT_CONNECT_TIMEOUT};

pub const TRANSPORT_VAR: &str = "QSIM_TRANSPORT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// All ranks as threads of this process.
    #[default]
    Simulated,
    /// This process is one rank of a TCP world described by the environment.
    External,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simulated" => Ok(Backend::Simulated),
            "external" => Ok(Backend::External),
            other => Err(format!(
                "unknown transport '{other}' (expected simulated or external)"
            )),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Simulated => "simulated",
            Backend::External => "external",
        })
    }
}

impl Backend {
    /// `explicit` if given, else `QSIM_TRANSPORT`, else simulated.
    pub fn resolve(explicit: Option<Backend>) -> Result<Backend, String> {
        match explicit {
            Some(b) => Ok(b),
            None => match std::env::var(TRANSPORT_VAR) {
                Ok(v) if !v.trim().is_empty() => v.parse(),
                _ => Ok(Backend::Simulated),
            },
        }
    }
}

/// Per-rank results of an SPMD run. With the external backend only this
/// process's rank is present.
#[derive(Debug)]
pub struct WorldOutput<R> {
    pub results: Vec<(usize, R)>,
}

impl<R> WorldOutput<R> {
    /// Result of rank 0, if it ran in this process.
    pub fn root(&self) -> Option<&R> {
        self.results.iter().find(|(r, _)| *r == 0).map(|(_, v)| v)
    }

    pub fn into_root(self) -> Option<R> {
        self.results
            .into_iter()
            .find(|(r, _)| *r == 0)
            .map(|(_, v)| v)
    }
}

/// Runs `f` on every rank of a `2^log_ranks` world.
pub fn run_world<R, F>(
    backend: Backend,
    log_ranks: usize,
    f: F,
) -> Result<WorldOutput<R>, TransportError>
where
    R: Send,
    F: Fn(Endpoint) -> R + Sync,
{
    match backend {
        Backend::Simulated => Ok(WorldOutput {
            results: run_simulated(log_ranks, f)
                .into_iter()
                .enumerate()
                .collect(),
        }),
        Backend::External => {
            let cfg = TcpConfig::from_env()?;
            if cfg.log_ranks() != log_ranks {
                return Err(TransportError::Backend {
                    rank: cfg.rank,
                    message: format!(
                        "world has {} ranks but 2^{log_ranks} were requested",
                        cfg.peers.len()
                    ),
                });
            }
            let io_timeout = io_timeout_from_env()?;
            let mut link = TcpLink::connect(&cfg, DEFAULT_CONNECT_TIMEOUT)?;
            link.set_io_timeout(io_timeout)?;
            Ok(WorldOutput {
                results: vec![(cfg.rank, f(Endpoint::new(Box::new(link))))],
            })
        }
    }
}

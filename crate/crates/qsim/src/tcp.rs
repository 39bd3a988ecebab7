//! Multi-process world over TCP.
//!
//! Each process is one rank. Ranks are told their id and the listen address
//! of every rank through the environment:
//!
//! ```text
//! QSIM_RANK=1 QSIM_PEERS=127.0.0.1:7100,127.0.0.1:7101 qsim ...
//! ```
//!
//! The number of peers must be a power of two. Every pair of ranks shares
//! one stream: the higher rank connects, the lower rank accepts. Frames are
//! `seq: u64 | kind: u8 | count: u64 | count values`, all little-endian,
//! amplitudes as `(re, im)` pairs.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use qsim_core::{TransportError, C64};

use crate::link::{Body, Link, Message};

pub const RANK_VAR: &str = "QSIM_RANK";
pub const PEERS_VAR: &str = "QSIM_PEERS";
pub const IO_TIMEOUT_VAR: &str = "QSIM_IO_TIMEOUT_SECS";
pub const DEFAULT_CONNECT_TIMEOUT: Duration = Duration::from_secs(30);
/// How long a blocked read or write may wait on a peer before the peer is
/// reported absent.
pub const DEFAULT_IO_TIMEOUT: Duration = Duration::from_secs(300);

/// `QSIM_IO_TIMEOUT_SECS` if set (0 disables the timeout), else the default.
pub fn io_timeout_from_env() -> Result<Option<Duration>, TransportError> {
    match std::env::var(IO_TIMEOUT_VAR) {
        Ok(v) => {
            let secs: f64 = v.trim().parse().map_err(|_| TransportError::Backend {
                rank: 0,
                message: format!("{IO_TIMEOUT_VAR}: '{v}' is not a number of seconds"),
            })?;
            Ok((secs > 0.0).then(|| Duration::from_secs_f64(secs)))
        }
        Err(_) => Ok(Some(DEFAULT_IO_TIMEOUT)),
    }
}

const KIND_AMPLITUDES: u8 = 0;
const KIND_REALS: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpConfig {
    pub rank: usize,
    pub peers: Vec<SocketAddr>,
}

impl TcpConfig {
    pub fn from_env() -> Result<Self, TransportError> {
        let bad = |message: String| TransportError::Backend { rank: 0, message };
        let rank = std::env::var(RANK_VAR)
            .map_err(|_| bad(format!("{RANK_VAR} is not set")))?
            .trim()
            .parse::<usize>()
            .map_err(|e| bad(format!("{RANK_VAR}: {e}")))?;
        let peers = std::env::var(PEERS_VAR).map_err(|_| bad(format!("{PEERS_VAR} is not set")))?;
        let peers = peers
            .split(',')
            .map(|s| s.trim().parse::<SocketAddr>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("{PEERS_VAR}: {e}")))?;
        let cfg = Self { rank, peers };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn log_ranks(&self) -> usize {
        self.peers.len().trailing_zeros() as usize
    }

    fn validate(&self) -> Result<(), TransportError> {
        let n = self.peers.len();
        if !n.is_power_of_two() {
            return Err(TransportError::Backend {
                rank: self.rank,
                message: format!("world size {n} is not a power of two"),
            });
        }
        if self.rank >= n {
            return Err(TransportError::NoSuchPeer {
                rank: self.rank,
                peer: self.rank,
                n_ranks: n,
            });
        }
        Ok(())
    }
}

pub struct TcpLink {
    rank: usize,
    log_ranks: usize,
    streams: Vec<Option<TcpStream>>,
}

fn io_error(rank: usize, peer: usize, e: io::Error) -> TransportError {
    match e.kind() {
        io::ErrorKind::UnexpectedEof
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::ConnectionRefused
        | io::ErrorKind::BrokenPipe
        | io::ErrorKind::TimedOut
        | io::ErrorKind::WouldBlock => TransportError::PeerAbsent { rank, peer },
        _ => TransportError::Backend {
            rank,
            message: format!("peer {peer}: {e}"),
        },
    }
}

impl TcpLink {
    /// Binds this rank's address from `cfg` and connects to every peer.
    pub fn connect(cfg: &TcpConfig, timeout: Duration) -> Result<Self, TransportError> {
        cfg.validate()?;
        let listener =
            TcpListener::bind(cfg.peers[cfg.rank]).map_err(|e| TransportError::Backend {
                rank: cfg.rank,
                message: format!("bind {}: {e}", cfg.peers[cfg.rank]),
            })?;
        Self::establish(cfg, listener, timeout)
    }

    /// Completes the mesh using an already bound listener for this rank.
    pub fn establish(
        cfg: &TcpConfig,
        listener: TcpListener,
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        cfg.validate()?;
        let rank = cfg.rank;
        let n = cfg.peers.len();
        let deadline = Instant::now() + timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();

        for (peer, addr) in cfg.peers.iter().enumerate().take(rank) {
            let mut stream = loop {
                match TcpStream::connect_timeout(addr, Duration::from_millis(500)) {
                    Ok(s) => break s,
                    Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
                    Err(_) => return Err(TransportError::PeerAbsent { rank, peer }),
                }
            };
            stream
                .write_all(&(rank as u64).to_le_bytes())
                .map_err(|e| io_error(rank, peer, e))?;
            streams[peer] = Some(stream);
        }

        listener
            .set_nonblocking(true)
            .map_err(|e| io_error(rank, rank, e))?;
        let mut pending = n - 1 - rank;
        while pending > 0 {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream
                        .set_nonblocking(false)
                        .map_err(|e| io_error(rank, rank, e))?;
                    stream
                        .set_read_timeout(Some(
                            deadline
                                .saturating_duration_since(Instant::now())
                                .max(Duration::from_millis(1)),
                        ))
                        .map_err(|e| io_error(rank, rank, e))?;
                    let mut id = [0u8; 8];
                    stream
                        .read_exact(&mut id)
                        .map_err(|e| io_error(rank, rank, e))?;
                    let peer = u64::from_le_bytes(id) as usize;
                    if peer <= rank || peer >= n || streams[peer].is_some() {
                        return Err(TransportError::Backend {
                            rank,
                            message: format!("unexpected handshake from rank {peer}"),
                        });
                    }
                    streams[peer] = Some(stream);
                    pending -= 1;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        let missing = (rank + 1..n)
                            .find(|&p| streams[p].is_none())
                            .unwrap_or(rank);
                        return Err(TransportError::PeerAbsent {
                            rank,
                            peer: missing,
                        });
                    }
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(io_error(rank, rank, e)),
            }
        }
        for s in streams.iter().flatten() {
            s.set_nodelay(true).map_err(|e| io_error(rank, rank, e))?;
        }
        let mut link = Self {
            rank,
            log_ranks: cfg.log_ranks(),
            streams,
        };
        link.set_io_timeout(Some(DEFAULT_IO_TIMEOUT))?;
        Ok(link)
    }

    /// Bounds every blocking read and write; `None` waits forever.
    pub fn set_io_timeout(&mut self, timeout: Option<Duration>) -> Result<(), TransportError> {
        let rank = self.rank;
        for s in self.streams.iter().flatten() {
            s.set_read_timeout(timeout)
                .and_then(|_| s.set_write_timeout(timeout))
                .map_err(|e| io_error(rank, rank, e))?;
        }
        Ok(())
    }

    fn stream(&mut self, peer: usize) -> Result<&mut TcpStream, TransportError> {
        let rank = self.rank;
        self.streams
            .get_mut(peer)
            .and_then(Option::as_mut)
            .ok_or(TransportError::PeerAbsent { rank, peer })
    }
}

pub(crate) fn encode(msg: &Message) -> Vec<u8> {
    let (kind, count) = match &msg.body {
        Body::Amplitudes(v) => (KIND_AMPLITUDES, v.len()),
        Body::Reals(v) => (KIND_REALS, v.len()),
    };
    let mut buf = Vec::with_capacity(17 + count * 16);
    buf.extend_from_slice(&msg.seq.to_le_bytes());
    buf.push(kind);
    buf.extend_from_slice(&(count as u64).to_le_bytes());
    match &msg.body {
        Body::Amplitudes(v) => {
            for a in v {
                buf.extend_from_slice(&a.re.to_le_bytes());
                buf.extend_from_slice(&a.im.to_le_bytes());
            }
        }
        Body::Reals(v) => {
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    buf
}

pub(crate) fn decode(reader: &mut impl Read) -> io::Result<Message> {
    let mut head = [0u8; 17];
    reader.read_exact(&mut head)?;
    let seq = u64::from_le_bytes(head[..8].try_into().expect("8 bytes"));
    let kind = head[8];
    let count = u64::from_le_bytes(head[9..].try_into().expect("8 bytes")) as usize;
    let width = match kind {
        KIND_AMPLITUDES => 16,
        KIND_REALS => 8,
        other => {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("unknown frame kind {other}"),
            ))
        }
    };
    let mut payload = vec![0u8; count * width];
    reader.read_exact(&mut payload)?;
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    let body = if kind == KIND_AMPLITUDES {
        Body::Amplitudes(
            payload
                .chunks_exact(16)
                .map(|c| C64::new(f(&c[..8]), f(&c[8..])))
                .collect(),
        )
    } else {
        Body::Reals(payload.chunks_exact(8).map(f).collect())
    };
    Ok(Message { seq, body })
}

impl Link for TcpLink {
    fn rank(&self) -> usize {
        self.rank
    }

    fn log_ranks(&self) -> usize {
        self.log_ranks
    }

    fn send(&mut self, to: usize, msg: Message) -> Result<(), TransportError> {
        let rank = self.rank;
        let frame = encode(&msg);
        self.stream(to)?
            .write_all(&frame)
            .map_err(|e| io_error(rank, to, e))
    }

    fn recv(&mut self, from: usize) -> Result<Message, TransportError> {
        let rank = self.rank;
        decode(self.stream(from)?).map_err(|e| io_error(rank, from, e))
    }

    /// The lower rank sends first so two large blocking writes never face
    /// each other.
    fn sendrecv(&mut self, peer: usize, msg: Message) -> Result<Message, TransportError> {
        if self.rank < peer {
            self.send(peer, msg)?;
            self.recv(peer)
        } else {
            let reply = self.recv(peer)?;
            self.send(peer, msg)?;
            Ok(reply)
        }
    }
}

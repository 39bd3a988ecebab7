//! Point-to-point messaging and the collectives built on it.
//!
//! A [`Link`] only moves tagged messages between two ranks. [`Endpoint`]
//! layers the [`Transport`] contract on top: sequence checks, length
//! checks, the fixed binary-tree reduction, and traffic counters. Every
//! backend therefore shares one implementation of the collectives.

use qsim_core::{StatsRecorder, Transport, TransportError, TransportStats, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Amplitudes(Vec<C64>),
    Reals(Vec<f64>),
}

impl Body {
    pub fn len(&self) -> usize {
        match self {
            Body::Amplitudes(v) => v.len(),
            Body::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub body: Body,
}

pub trait Link: Send {
    fn rank(&self) -> usize;

    fn log_ranks(&self) -> usize;

    fn send(&mut self, to: usize, msg: Message) -> Result<(), TransportError>;

    /// Blocks until the next message from `from` arrives.
    fn recv(&mut self, from: usize) -> Result<Message, TransportError>;

    /// Sends to and receives from the same peer.
    fn sendrecv(&mut self, peer: usize, msg: Message) -> Result<Message, TransportError> {
        self.send(peer, msg)?;
        self.recv(peer)
    }
}

/// One rank's handle on the world.
pub struct Endpoint {
    link: Box<dyn Link>,
    recorder: StatsRecorder,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("rank", &self.link.rank())
            .field("log_ranks", &self.link.log_ranks())
            .field("seq", &self.recorder.seq())
            .finish()
    }
}

impl Endpoint {
    pub fn new(link: Box<dyn Link>) -> Self {
        Self {
            link,
            recorder: StatsRecorder::default(),
        }
    }

    fn check_peer(&self, peer: usize) -> Result<(), TransportError> {
        let rank = self.link.rank();
        let n_ranks = 1 << self.link.log_ranks();
        if peer == rank {
            Err(TransportError::SelfExchange { rank })
        } else if peer >= n_ranks {
            Err(TransportError::NoSuchPeer {
                rank,
                peer,
                n_ranks,
            })
        } else {
            Ok(())
        }
    }

    fn message(&self, body: Body) -> Message {
        Message {
            seq: self.recorder.seq(),
            body,
        }
    }

    /// Validates the tag and length of a message from `peer`.
    fn accept(&self, peer: usize, msg: &Message, len: usize) -> Result<(), TransportError> {
        let rank = self.link.rank();
        if msg.seq != self.recorder.seq() {
            return Err(TransportError::OutOfOrder {
                rank,
                peer,
                expected: self.recorder.seq(),
                got: msg.seq,
            });
        }
        if msg.body.len() != len {
            return Err(TransportError::LengthMismatch {
                rank,
                peer,
                ours: len,
                theirs: msg.body.len(),
            });
        }
        Ok(())
    }

    fn recv_reals(&mut self, peer: usize, len: usize) -> Result<Vec<f64>, TransportError> {
        let msg = self.link.recv(peer)?;
        self.accept(peer, &msg, len)?;
        match msg.body {
            Body::Reals(v) => Ok(v),
            Body::Amplitudes(_) => Err(self.wrong_kind(peer)),
        }
    }

    fn wrong_kind(&self, peer: usize) -> TransportError {
        TransportError::Backend {
            rank: self.link.rank(),
            message: format!("unexpected message kind from rank {peer}"),
        }
    }
}

impl Transport for Endpoint {
    fn rank(&self) -> usize {
        self.link.rank()
    }

    fn log_ranks(&self) -> usize {
        self.link.log_ranks()
    }

    fn begin_op(&mut self, seq: u64) {
        self.recorder.begin_op(seq);
    }

    fn exchange(
        &mut self,
        partner: usize,
        send: &[C64],
        recv: &mut [C64],
    ) -> Result<(), TransportError> {
        self.check_peer(partner)?;
        if send.len() != recv.len() {
            return Err(TransportError::LengthMismatch {
                rank: self.rank(),
                peer: partner,
                ours: send.len(),
                theirs: recv.len(),
            });
        }
        let reply = self
            .link
            .sendrecv(partner, self.message(Body::Amplitudes(send.to_vec())))?;
        self.accept(partner, &reply, recv.len())?;
        match reply.body {
            Body::Amplitudes(v) => recv.copy_from_slice(&v),
            Body::Reals(_) => return Err(self.wrong_kind(partner)),
        }
        self.recorder.record_exchange(partner, send.len());
        Ok(())
    }

    /// Binary-tree reduction to rank 0 followed by a tree broadcast. At level
    /// `s`, rank `r` (low `s` bits clear) adds the partial sum of
    /// `r + 2^s`; the order is fixed, so results are bit-reproducible.
    fn allreduce_sum(&mut self, values: &mut [f64]) -> Result<(), TransportError> {
        let rank = self.rank();
        let p = self.log_ranks();
        for s in 0..p {
            let bit = 1 << s;
            if rank & bit != 0 {
                self.link
                    .send(rank ^ bit, self.message(Body::Reals(values.to_vec())))?;
                break;
            }
            let peer = rank | bit;
            let theirs = self.recv_reals(peer, values.len())?;
            for (v, t) in values.iter_mut().zip(theirs) {
                *v += t;
            }
        }
        for s in (0..p).rev() {
            let bit = 1 << s;
            let low = (bit << 1) - 1;
            if rank & low == 0 {
                self.link
                    .send(rank | bit, self.message(Body::Reals(values.to_vec())))?;
            } else if rank & low == bit {
                let v = self.recv_reals(rank ^ bit, values.len())?;
                values.copy_from_slice(&v);
            }
        }
        self.recorder.record_allreduce();
        Ok(())
    }

    fn gather_to_root(&mut self, local: &[C64]) -> Result<Vec<C64>, TransportError> {
        let rank = self.rank();
        let out = if rank == 0 {
            let mut full = Vec::with_capacity(local.len() << self.log_ranks());
            full.extend_from_slice(local);
            for peer in 1..self.n_ranks() {
                let msg = self.link.recv(peer)?;
                self.accept(peer, &msg, local.len())?;
                match msg.body {
                    Body::Amplitudes(v) => full.extend_from_slice(&v),
                    Body::Reals(_) => return Err(self.wrong_kind(peer)),
                }
            }
            full
        } else {
            self.link
                .send(0, self.message(Body::Amplitudes(local.to_vec())))?;
            Vec::new()
        };
        self.recorder.record_gather();
        Ok(out)
    }

    fn stats(&self) -> TransportStats {
        self.recorder.snapshot()
    }
}

//! In-process world: one thread per rank, connected by a full mesh of
//! unbounded channels.

use std::panic;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;

use qsim_core::TransportError;

use crate::link::{Endpoint, Link, Message};

pub struct SimLink {
    rank: usize,
    log_ranks: usize,
    to: Vec<Option<Sender<Message>>>,
    from: Vec<Option<Receiver<Message>>>,
}

impl Link for SimLink {
    fn rank(&self) -> usize {
        self.rank
    }

    fn log_ranks(&self) -> usize {
        self.log_ranks
    }

    fn send(&mut self, to: usize, msg: Message) -> Result<(), TransportError> {
        let absent = TransportError::PeerAbsent {
            rank: self.rank,
            peer: to,
        };
        match self.to.get(to).and_then(Option::as_ref) {
            Some(tx) => tx.send(msg).map_err(|_| absent),
            None => Err(absent),
        }
    }

    fn recv(&mut self, from: usize) -> Result<Message, TransportError> {
        let absent = TransportError::PeerAbsent {
            rank: self.rank,
            peer: from,
        };
        match self.from.get(from).and_then(Option::as_ref) {
            Some(rx) => rx.recv().map_err(|_| absent),
            None => Err(absent),
        }
    }
}

/// Creates the `2^log_ranks` links of a fully connected world.
pub fn sim_links(log_ranks: usize) -> Vec<SimLink> {
    let n = 1usize << log_ranks;
    let mut links: Vec<SimLink> = (0..n)
        .map(|rank| SimLink {
            rank,
            log_ranks,
            to: (0..n).map(|_| None).collect(),
            from: (0..n).map(|_| None).collect(),
        })
        .collect();
    for src in 0..n {
        for dst in 0..n {
            if src != dst {
                let (tx, rx) = channel();
                links[src].to[dst] = Some(tx);
                links[dst].from[src] = Some(rx);
            }
        }
    }
    links
}

/// Runs `f` once per rank of a `2^log_ranks` world and returns the results
/// in rank order. A single-rank world runs on the calling thread. A panic
/// on any rank is propagated after all ranks finish.
pub fn run_simulated<R, F>(log_ranks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Endpoint) -> R + Sync,
{
    let mut links = sim_links(log_ranks);
    if links.len() == 1 {
        return vec![f(Endpoint::new(Box::new(links.pop().expect("one link"))))];
    }
    thread::scope(|scope| {
        let handles: Vec<_> = links
            .into_iter()
            .map(|link| {
                let f = &f;
                thread::Builder::new()
                    .name(format!("rank-{}", link.rank))
                    .spawn_scoped(scope, move || f(Endpoint::new(Box::new(link))))
                    .expect("spawn rank thread")
            })
            .collect();
        let joined: Vec<_> = handles.into_iter().map(|h| h.join()).collect();
        joined
            .into_iter()
            .map(|r| r.unwrap_or_else(|e| panic::resume_unwind(e)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim_core::{Transport, C64};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn two_rank_swap_and_restore() {
        let out = run_simulated(1, |mut ep| {
            let mine = vec![c(ep.rank() as f64 + 10.0)];
            let mut got = vec![c(0.0)];
            ep.begin_op(1);
            ep.exchange(ep.rank() ^ 1, &mine, &mut got).unwrap();
            let mut back = vec![c(0.0)];
            ep.begin_op(2);
            ep.exchange(ep.rank() ^ 1, &got, &mut back).unwrap();
            (got[0], back[0], ep.stats())
        });
        assert_eq!(out[0].0, c(11.0));
        assert_eq!(out[1].0, c(10.0));
        assert_eq!(out[0].1, c(10.0));
        assert_eq!(out[1].1, c(11.0));
        assert_eq!(out[0].2.exchanges, 2);
        assert_eq!(out[0].2.bytes_sent, 32);
    }

    #[test]
    fn concurrent_pairs_do_not_cross_talk() {
        let out = run_simulated(2, |mut ep| {
            let r = ep.rank();
            let sentinel = vec![c(1000.0 + r as f64), c(-(r as f64))];
            let mut got = vec![c(0.0); 2];
            ep.begin_op(1);
            ep.exchange(r ^ 2, &sentinel, &mut got).unwrap();
            got
        });
        for (r, got) in out.iter().enumerate() {
            let p = r ^ 2;
            assert_eq!(got, &vec![c(1000.0 + p as f64), c(-(p as f64))]);
        }
    }

    #[test]
    fn allreduce_sums_on_every_rank() {
        for p in 0..4 {
            let out = run_simulated(p, |mut ep| {
                let mut v = [1.0, ep.rank() as f64];
                ep.allreduce_sum(&mut v).unwrap();
                v
            });
            let n = 1usize << p;
            let tri = (n * (n - 1) / 2) as f64;
            assert!(out.iter().all(|v| *v == [n as f64, tri]), "p={p}: {out:?}");
        }
    }

    #[test]
    fn allreduce_is_bit_reproducible() {
        let run = || {
            run_simulated(3, |mut ep| {
                let mut v = [
                    0.1 * (ep.rank() as f64 + 1.0).sqrt(),
                    1e-17 * ep.rank() as f64,
                ];
                ep.allreduce_sum(&mut v).unwrap();
                v.map(f64::to_bits)
            })
        };
        let a = run();
        assert!(a.iter().all(|v| *v == a[0]));
        assert_eq!(a, run());
    }

    #[test]
    fn gather_concatenates_in_rank_order() {
        let out = run_simulated(2, |mut ep| {
            ep.gather_to_root(&[c(ep.rank() as f64)]).unwrap()
        });
        assert_eq!(out[0], vec![c(0.0), c(1.0), c(2.0), c(3.0)]);
        assert!(out[1..].iter().all(Vec::is_empty));
        let solo = run_simulated(0, |mut ep| ep.gather_to_root(&[c(5.0)]).unwrap());
        assert_eq!(solo[0], vec![c(5.0)]);
    }

    #[test]
    fn length_and_order_mismatches_are_reported() {
        let out = run_simulated(1, |mut ep| {
            let len = 1 + ep.rank();
            ep.begin_op(1);
            ep.exchange(ep.rank() ^ 1, &vec![c(0.0); len], &mut vec![c(0.0); len])
        });
        assert!(out
            .iter()
            .all(|r| matches!(r, Err(TransportError::LengthMismatch { .. }))));

        let out = run_simulated(1, |mut ep| {
            ep.begin_op(1 + ep.rank() as u64);
            ep.exchange(ep.rank() ^ 1, &[c(0.0)], &mut [c(0.0)])
        });
        assert!(out
            .iter()
            .all(|r| matches!(r, Err(TransportError::OutOfOrder { .. }))));
    }

    #[test]
    fn missing_partner_is_fatal_not_a_hang() {
        let out = run_simulated(1, |mut ep| {
            if ep.rank() == 1 {
                return Ok(());
            }
            ep.begin_op(1);
            ep.exchange(1, &[c(0.0)], &mut [c(0.0)])
        });
        assert_eq!(out[0], Err(TransportError::PeerAbsent { rank: 0, peer: 1 }));
    }

    #[test]
    fn self_and_foreign_peers_rejected() {
        let out = run_simulated(1, |mut ep| {
            let me = ep.rank();
            (
                ep.exchange(me, &[c(0.0)], &mut [c(0.0)]),
                ep.exchange(9, &[c(0.0)], &mut [c(0.0)]),
            )
        });
        assert_eq!(out[0].0, Err(TransportError::SelfExchange { rank: 0 }));
        assert!(matches!(
            out[1].1,
            Err(TransportError::NoSuchPeer { peer: 9, .. })
        ));
    }
}

//! Lossy, rate-limited links on a virtual clock, and a UDP loopback transport
//! with the same send/poll contract.

use std::collections::VecDeque;
use std::io;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::MAX_DATAGRAM;

/// Virtual time in seconds.
pub type Seconds = f64;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("datagram of {0} bytes exceeds the {MAX_DATAGRAM}-byte budget")]
    MtuExceeded(usize),
    #[error("invalid link parameters: {0}")]
    InvalidParams(String),
    #[error("failed to bind port {port}: {source}")]
    BindFailure { port: u16, source: io::Error },
    #[error("transport has no peer")]
    NoPeer,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One directed link: i.i.d. Bernoulli loss, serialization at `rate_limit`, fixed latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub loss_rate: f64,
    /// Bytes per second.
    pub rate_limit: f64,
    /// One-way propagation delay in milliseconds.
    pub latency_ms: f64,
    pub seed: u64,
}

impl LinkParams {
    pub fn new(loss_rate: f64, rate_limit: f64, latency_ms: f64, seed: u64) -> Self {
        Self { loss_rate, rate_limit, latency_ms, seed }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(0.0..=1.0).contains(&self.loss_rate) {
            return Err(ChannelError::InvalidParams(format!("loss rate {} outside [0, 1]", self.loss_rate)));
        }
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(ChannelError::InvalidParams(format!("rate limit {} must be positive", self.rate_limit)));
        }
        if !(self.latency_ms >= 0.0 && self.latency_ms.is_finite()) {
            return Err(ChannelError::InvalidParams(format!("latency {} must be nonnegative", self.latency_ms)));
        }
        Ok(())
    }

    pub fn latency(&self) -> Seconds {
        self.latency_ms / 1000.0
    }

    /// Time to clock `bytes` onto the link.
    pub fn serialization(&self, bytes: usize) -> Seconds {
        bytes as f64 / self.rate_limit
    }
}

/// `sent = delivered + dropped + in_flight`; once a link drains, `sent = delivered + dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bytes_delivered: u64,
}

/// Datagram send/receive, either simulated or real.
pub trait Transport {
    fn send(&mut self, packet: &[u8], now: Seconds) -> Result<(), ChannelError>;
    /// Everything due by `now`, oldest first.
    fn poll(&mut self, now: Seconds) -> Vec<Vec<u8>>;
}

#[derive(Debug, Clone)]
pub struct SimLink {
    params: LinkParams,
    rng: ChaCha8Rng,
    queue: VecDeque<(Seconds, Vec<u8>)>,
    busy_until: Seconds,
    stats: LinkStats,
}

impl SimLink {
    pub fn new(params: LinkParams) -> Result<Self, ChannelError> {
        params.validate()?;
        Ok(Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            queue: VecDeque::new(),
            busy_until: 0.0,
            stats: LinkStats::default(),
        })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// When the transmitter finishes the packets already handed to it.
    pub fn idle_at(&self) -> Seconds {
        self.busy_until
    }

    pub fn is_idle(&self, now: Seconds) -> bool {
        self.busy_until <= now
    }

    pub fn next_delivery(&self) -> Option<Seconds> {
        self.queue.front().map(|(t, _)| *t)
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Drops everything in flight (the far end went away).
    pub fn clear(&mut self) -> usize {
        let lost = self.queue.len();
        self.stats.dropped += lost as u64;
        self.queue.clear();
        lost
    }
}

impl Transport for SimLink {
    fn send(&mut self, packet: &[u8], now: Seconds) -> Result<(), ChannelError> {
        if packet.len() > MAX_DATAGRAM {
            return Err(ChannelError::MtuExceeded(packet.len()));
        }
        let start = self.busy_until.max(now);
        let done = start + self.params.serialization(packet.len());
        self.busy_until = done;
        self.stats.sent += 1;
        // A lost packet still occupied the transmitter.
        if self.rng.gen::<f64>() < self.params.loss_rate {
            self.stats.dropped += 1;
        } else {
            self.queue.push_back((done + self.params.latency(), packet.to_vec()));
        }
        Ok(())
    }

    fn poll(&mut self, now: Seconds) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        while let Some((t, _)) = self.queue.front() {
            if *t > now {
                break;
            }
            let (_, p) = self.queue.pop_front().unwrap();
            self.stats.delivered += 1;
            self.stats.bytes_delivered += p.len() as u64;
            out.push(p);
        }
        out
    }
}

/// Real datagrams over 127.0.0.1. Wall-clock; the `now` arguments are ignored.
#[derive(Debug)]
pub struct LoopbackTransport {
    socket: UdpSocket,
    peer: Option<SocketAddr>,
}

impl LoopbackTransport {
    /// Port 0 picks an ephemeral port.
    pub fn bind(port: u16) -> Result<Self, ChannelError> {
        let socket = UdpSocket::bind((Ipv4Addr::LOCALHOST, port))
            .map_err(|source| ChannelError::BindFailure { port, source })?;
        socket.set_nonblocking(true)?;
        Ok(Self { socket, peer: None })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ChannelError> {
        Ok(self.socket.local_addr()?)
    }

    pub fn connect(&mut self, peer: SocketAddr) {
        self.peer = Some(peer);
    }

    /// A second handle on the same socket, for a separate sender or receiver thread.
    pub fn try_clone(&self) -> Result<Self, ChannelError> {
        Ok(Self { socket: self.socket.try_clone()?, peer: self.peer })
    }

    pub fn send_datagram(&self, packet: &[u8]) -> Result<(), ChannelError> {
        if packet.len() > MAX_DATAGRAM {
            return Err(ChannelError::MtuExceeded(packet.len()));
        }
        let peer = self.peer.ok_or(ChannelError::NoPeer)?;
        loop {
            match self.socket.send_to(packet, peer) {
                Ok(_) => return Ok(()),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => std::thread::yield_now(),
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Next pending datagram, or `None` when nothing is queued.
    pub fn recv(&self) -> Result<Option<Vec<u8>>, ChannelError> {
        let mut buf = [0u8; 2048];
        match self.socket.recv_from(&mut buf) {
            Ok((len, _)) => Ok(Some(buf[..len].to_vec())),
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

impl Transport for LoopbackTransport {
    fn send(&mut self, packet: &[u8], _now: Seconds) -> Result<(), ChannelError> {
        self.send_datagram(packet)
    }

    fn poll(&mut self, _now: Seconds) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        while let Ok(Some(p)) = self.recv() {
            out.push(p);
        }
        out
    }
}

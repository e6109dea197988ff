//! Cooperative download sessions on a virtual clock.
//!
//! One requesting user (RU) downloads a file from the server over its own
//! direct path and through any number of assistant users (AUs), each of
//! which relays what it receives from the server over a second link. In LT
//! mode the server streams fresh encoded symbols over every path with free
//! capacity; in ARQ mode it assigns raw chunks to paths and retransmits on
//! timeout.

mod arq;
mod config;
mod control;
mod engine;
pub mod loopback;
mod monitor;
mod receiver;
mod session;

use serde::Serialize;
use thiserror::Error;

use crate::channel::ChannelError;
use crate::lt::LtError;
use crate::wire::WireError;

pub use arq::run_arq_baseline;
pub use config::{ArqParams, AssistantConfig, ChurnAction, ChurnEvent, Mode, SessionConfig};
pub use control::Node;
pub use monitor::GoodputMonitor;
pub use receiver::{IngestOutcome, Receiver};
pub use session::{run_session, Dissemination};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("session aborted at t={at:.3}s: {diagnostic}")]
    Timeout { at: f64, diagnostic: String },
    #[error(transparent)]
    Codec(#[from] LtError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Runs `cfg` in whichever mode it names.
pub fn run(cfg: &SessionConfig) -> Result<SessionReport, SessionError> {
    match cfg.mode {
        Mode::Lt => run_session(cfg),
        Mode::Arq => run_arq_baseline(cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    /// `"direct"` or `"au-<id>"`.
    pub path: String,
    /// Data packets the server put on the path's first link.
    pub sent: u64,
    /// Packets an AU relayed onward (zero on the direct path).
    pub forwarded: u64,
    /// Packets that reached the RU over this path.
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub mode: Mode,
    pub file_len: u64,
    /// Control-plane time before the first data packet.
    pub setup_time: f64,
    /// From first data packet to the RU holding the whole file.
    pub completion_time: f64,
    /// `file_len / completion_time`, bytes per second.
    pub goodput: f64,
    pub per_path: Vec<PathReport>,
    /// Data packets received by the RU over the source symbols they had to cover, minus one.
    pub total_overhead: f64,
    pub packets_received: u64,
    /// Packets for finished blocks or already-held chunks.
    pub redundant: u64,
    pub malformed: u64,
    /// Useful bytes per second in each monitor window.
    pub timeline: Vec<f64>,
    pub monitor_window: f64,
    pub terminate_signals: u32,
    pub control_messages: u32,
    /// ARQ only.
    pub retransmissions: u64,
    /// ARQ only: chunks pulled back from a failing path.
    pub reassigned: u64,
    /// Output equals the input byte for byte.
    pub exact: bool,
}

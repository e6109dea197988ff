use super::config::{Mode, SessionConfig};
use super::engine::{Engine, ServerEvent, FILE_ID, RU_ID};
use super::monitor::GoodputMonitor;
use super::receiver::{IngestOutcome, Receiver};
use super::{SessionError, SessionReport};
use crate::channel::{SimLink, Transport};
use crate::lt::{LtCode, SeedStream, SourceBlock};
use crate::wire::{encode_data_packet, ControlMessage, DataPacket, VERSION_LT_SPLITMIX};

/// Server-side symbol source: a sliding window of unfinished blocks, each
/// with its own never-repeating seed stream.
pub struct Dissemination {
    code: LtCode,
    blocks: Vec<SourceBlock>,
    seeds: Vec<SeedStream>,
    acked: Vec<bool>,
    window: Vec<u32>,
    window_size: usize,
    next_admit: usize,
    cursor: usize,
    sent_per_block: Vec<u64>,
}

impl Dissemination {
    pub fn new(code: LtCode, blocks: Vec<SourceBlock>, session_seed: u64, window_size: usize) -> Self {
        let seeds = blocks.iter().map(|b| SeedStream::new(session_seed, b.block_id())).collect();
        let count = blocks.len();
        let mut d = Self {
            code,
            blocks,
            seeds,
            acked: vec![false; count],
            window: Vec::with_capacity(window_size),
            window_size: window_size.max(1),
            next_admit: 0,
            cursor: 0,
            sent_per_block: vec![0; count],
        };
        d.refill();
        d
    }

    fn refill(&mut self) {
        while self.window.len() < self.window_size && self.next_admit < self.blocks.len() {
            if !self.acked[self.next_admit] {
                self.window.push(self.next_admit as u32);
            }
            self.next_admit += 1;
        }
    }

    /// The RU reported `block_id` decoded.
    pub fn ack(&mut self, block_id: u32) {
        let Some(flag) = self.acked.get_mut(block_id as usize) else { return };
        *flag = true;
        if let Some(pos) = self.window.iter().position(|&b| b == block_id) {
            self.window.remove(pos);
            if pos < self.cursor {
                self.cursor -= 1;
            }
        }
        self.refill();
    }

    pub fn window(&self) -> &[u32] {
        &self.window
    }

    pub fn finished(&self) -> bool {
        self.window.is_empty()
    }

    pub fn sent_per_block(&self) -> &[u64] {
        &self.sent_per_block
    }

    /// Next fresh symbol, rotating over the window.
    pub fn next_packet(&mut self) -> Option<DataPacket> {
        if self.window.is_empty() {
            return None;
        }
        self.cursor %= self.window.len();
        let block_id = self.window[self.cursor];
        self.cursor += 1;
        let b = block_id as usize;
        let seed = self.seeds[b].next_seed();
        let sym = self.code.encode(&self.blocks[b], seed);
        self.sent_per_block[b] += 1;
        Some(DataPacket {
            version: VERSION_LT_SPLITMIX,
            block_id,
            block_count: self.blocks.len() as u32,
            n: self.code.params().n as u16,
            seed,
            payload: sym.payload,
        })
    }

    /// Puts one fresh symbol on every link whose transmitter is free at `now`.
    /// Returns the indices (into `links`) that received one.
    pub fn step(&mut self, now: f64, links: &mut [&mut SimLink]) -> Result<Vec<usize>, SessionError> {
        let mut used = Vec::new();
        for (i, link) in links.iter_mut().enumerate() {
            if !link.is_idle(now) {
                continue;
            }
            let Some(pkt) = self.next_packet() else { break };
            link.send(&encode_data_packet(&pkt)?, now)?;
            used.push(i);
        }
        Ok(used)
    }
}

/// Runs an LT-mode cooperative download to completion on the virtual clock.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionReport, SessionError> {
    if cfg.mode != Mode::Lt {
        return Err(SessionError::Config("run_session needs mode = lt".into()));
    }
    let mut eng = Engine::new(cfg)?;
    let data = cfg.file_bytes();
    let code = LtCode::new(cfg.coding)?;
    let (blocks, manifest) = code.segment(&data)?;
    // Blocks stay in flight in proportion to path count, so the symbols wasted
    // on a block between its completion and the ack arriving stay a fixed share.
    let window = cfg.block_window * eng.paths.len();
    let mut server = Dissemination::new(code.clone(), blocks, cfg.session_seed, window);
    let mut rx = Receiver::new(code, GoodputMonitor::new(cfg.monitor_window, manifest.total_len));
    let mut completed_at: Option<f64> = None;
    let mut monitor_started = false;
    eng.start()?;

    loop {
        let now = eng.now;
        if now > cfg.max_time {
            return Err(SessionError::Timeout {
                at: now,
                diagnostic: format!(
                    "{} of {} blocks decoded, {} live paths",
                    rx.completed_blocks(),
                    manifest.block_count,
                    eng.live_paths()
                ),
            });
        }
        eng.apply_churn(now)?;
        for ev in eng.handle_control(now)? {
            if let ServerEvent::BlockAck(b) = ev {
                server.ack(b);
            }
        }
        if eng.terminated {
            break;
        }
        if !monitor_started {
            if let Some(start) = eng.dissemination_start {
                rx.monitor_mut().start(start);
                monitor_started = true;
            }
        }

        let mut idle: Vec<&mut SimLink> =
            eng.paths.iter_mut().filter(|p| p.active).map(|p| p.first_hop()).collect();
        server.step(now, &mut idle)?;

        for (_, bytes) in eng.forward(now)? {
            if let IngestOutcome::Progress { block_id, block_completed, all_complete, .. } = rx.ingest(&bytes, now) {
                if block_completed {
                    eng.ru_send(&ControlMessage::BlockAck { client_id: RU_ID, block_id }, now)?;
                }
                if all_complete && completed_at.is_none() {
                    completed_at = Some(now);
                    eng.ru_send(&ControlMessage::Terminate { client_id: RU_ID, file_id: FILE_ID }, now)?;
                }
            }
        }

        let sender = if server.finished() {
            None
        } else {
            eng.paths
                .iter()
                .filter(|p| p.active)
                .map(|p| p.hops[0].idle_at())
                .filter(|&t| t > now)
                .min_by(f64::total_cmp)
        };
        match eng.next_event().into_iter().chain(sender).min_by(f64::total_cmp) {
            Some(t) => eng.now = t.max(now),
            None => {
                return Err(SessionError::Timeout {
                    at: now,
                    diagnostic: format!(
                        "no pending events: {} of {} blocks decoded, {} live paths",
                        rx.completed_blocks(),
                        manifest.block_count,
                        eng.live_paths()
                    ),
                })
            }
        }
    }

    let completed_at = completed_at.expect("terminate only follows completion");
    let start = eng.dissemination_start.unwrap_or(0.0);
    let completion_time = completed_at - start;
    let out = rx.assemble(manifest.total_len)?;
    let needed = manifest.block_count as f64 * cfg.coding.n as f64;
    Ok(SessionReport {
        mode: Mode::Lt,
        file_len: manifest.total_len,
        setup_time: start,
        completion_time,
        goodput: manifest.total_len as f64 / completion_time,
        per_path: eng.path_reports(),
        total_overhead: rx.received() as f64 / needed - 1.0,
        packets_received: rx.received(),
        redundant: rx.redundant(),
        malformed: rx.malformed(),
        timeline: rx.monitor().timeline(),
        monitor_window: cfg.monitor_window,
        terminate_signals: eng.terminate_signals,
        control_messages: eng.control.sent(),
        retransmissions: 0,
        reassigned: 0,
        exact: out == data,
    })
}

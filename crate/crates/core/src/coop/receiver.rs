use std::collections::{BTreeMap, HashSet};

use super::monitor::GoodputMonitor;
use crate::lt::{reassemble, DecoderState, EncodedSymbol, LtCode, LtError, Manifest, Progress};
use crate::wire::{decode_data_packet, VERSION_LT_SPLITMIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    /// Unparseable or inconsistent with the session's coding; dropped.
    Malformed,
    /// The block was already complete.
    Redundant { block_id: u32 },
    Progress {
        block_id: u32,
        progress: Progress,
        /// This packet finished its block.
        block_completed: bool,
        all_complete: bool,
    },
}

struct ActiveBlock {
    decoder: DecoderState,
    seeds: HashSet<u64>,
}

/// RU side of an LT session: routes packets to per-block decoders.
pub struct Receiver {
    code: LtCode,
    active: BTreeMap<u32, ActiveBlock>,
    done: Vec<Option<Vec<u8>>>,
    completed: u32,
    block_count: Option<u32>,
    received: u64,
    redundant: u64,
    malformed: u64,
    symbols_needed: u64,
    monitor: GoodputMonitor,
}

impl Receiver {
    pub fn new(code: LtCode, monitor: GoodputMonitor) -> Self {
        Self {
            code,
            active: BTreeMap::new(),
            done: Vec::new(),
            completed: 0,
            block_count: None,
            received: 0,
            redundant: 0,
            malformed: 0,
            symbols_needed: 0,
            monitor,
        }
    }

    pub fn monitor_mut(&mut self) -> &mut GoodputMonitor {
        &mut self.monitor
    }

    pub fn monitor(&self) -> &GoodputMonitor {
        &self.monitor
    }

    /// Parses `bytes` as a data packet and feeds its block's decoder.
    pub fn ingest(&mut self, bytes: &[u8], now: f64) -> IngestOutcome {
        let Ok(pkt) = decode_data_packet(bytes) else {
            self.malformed += 1;
            return IngestOutcome::Malformed;
        };
        let p = *self.code.params();
        let consistent = pkt.version == VERSION_LT_SPLITMIX
            && pkt.n as usize == p.n
            && pkt.payload.len() == p.symbol_size
            && self.block_count.is_none_or(|c| c == pkt.block_count);
        if !consistent {
            self.malformed += 1;
            return IngestOutcome::Malformed;
        }
        if self.block_count.is_none() {
            self.block_count = Some(pkt.block_count);
            self.done = vec![None; pkt.block_count as usize];
        }
        self.received += 1;
        let block_id = pkt.block_id;
        if self.done[block_id as usize].is_some() {
            self.redundant += 1;
            return IngestOutcome::Redundant { block_id };
        }
        let code = &self.code;
        let active = self
            .active
            .entry(block_id)
            .or_insert_with(|| ActiveBlock { decoder: code.decoder(block_id), seeds: HashSet::new() });
        if !active.seeds.insert(pkt.seed) {
            self.redundant += 1;
        }
        let sym = EncodedSymbol { block_id, seed: pkt.seed, payload: pkt.payload };
        let progress = active.decoder.push(&sym).expect("packet validated against coding params");
        self.monitor.credit(now, (progress.newly_recovered * p.symbol_size) as u64);
        let mut block_completed = false;
        if progress.complete {
            let finished = self.active.remove(&block_id).unwrap();
            self.symbols_needed += finished.decoder.received_count() as u64;
            self.done[block_id as usize] = Some(finished.decoder.block_bytes().expect("complete"));
            self.completed += 1;
            block_completed = true;
        }
        IngestOutcome::Progress { block_id, progress, block_completed, all_complete: self.is_complete() }
    }

    pub fn is_complete(&self) -> bool {
        self.block_count.is_some_and(|c| c == self.completed)
    }

    pub fn completed_blocks(&self) -> u32 {
        self.completed
    }

    /// Decoders currently holding state.
    pub fn active_blocks(&self) -> usize {
        self.active.len()
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn redundant(&self) -> u64 {
        self.redundant
    }

    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    pub fn assemble(&self, total_len: u64) -> Result<Vec<u8>, LtError> {
        if !self.is_complete() {
            return Err(LtError::NotReady);
        }
        let blocks: Vec<&[u8]> = self.done.iter().map(|b| b.as_deref().unwrap()).collect();
        reassemble(&blocks, &Manifest { total_len, block_count: blocks.len() as u32 })
    }
}

//! Selective-repeat ARQ over the same topology: the file is cut into raw
//! chunks, each path keeps a window of unacknowledged chunks, and a chunk
//! that keeps timing out on one path is handed back to the shared queue.

use std::collections::{BTreeMap, VecDeque};

use super::config::{Mode, SessionConfig};
use super::engine::{Engine, FILE_ID, RU_ID};
use super::monitor::GoodputMonitor;
use super::{SessionError, SessionReport};
use crate::channel::Transport;
use crate::wire::{
    decode_ack, decode_data_packet, encode_ack, encode_data_packet, ControlMessage, DataPacket, ACK_LEN,
    DATA_HEADER_LEN, VERSION_UNCODED,
};

#[derive(Debug, Clone, Copy)]
struct Outstanding {
    deadline: f64,
    retries: u32,
}

/// Runs an ARQ-mode download to completion on the virtual clock.
pub fn run_arq_baseline(cfg: &SessionConfig) -> Result<SessionReport, SessionError> {
    if cfg.mode != Mode::Arq {
        return Err(SessionError::Config("run_arq_baseline needs mode = arq".into()));
    }
    let mut eng = Engine::new(cfg)?;
    let data = cfg.file_bytes();
    let size = cfg.coding.symbol_size;
    let n = cfg.coding.n;
    let chunk_count = data.len().div_ceil(size);
    let block_count = chunk_count.div_ceil(n) as u32;
    let packet_len = DATA_HEADER_LEN + size;
    let timeouts: Vec<f64> = eng.paths.iter().map(|p| 2.0 * p.round_trip(packet_len, ACK_LEN)).collect();

    let packet = |chunk: usize| -> Result<Vec<u8>, SessionError> {
        let mut payload = vec![0u8; size];
        let lo = chunk * size;
        let hi = (lo + size).min(data.len());
        payload[..hi - lo].copy_from_slice(&data[lo..hi]);
        Ok(encode_data_packet(&DataPacket {
            version: VERSION_UNCODED,
            block_id: (chunk / n) as u32,
            block_count,
            n: n as u16,
            seed: chunk as u64,
            payload,
        })?)
    };

    let mut queue: VecDeque<usize> = (0..chunk_count).collect();
    let mut outstanding: Vec<BTreeMap<usize, Outstanding>> = vec![BTreeMap::new(); eng.paths.len()];
    let mut acked = vec![false; chunk_count];
    let mut held: Vec<Option<Vec<u8>>> = vec![None; chunk_count];
    let mut held_count = 0usize;
    let mut received = 0u64;
    let mut redundant = 0u64;
    let mut malformed = 0u64;
    let mut retransmissions = 0u64;
    let mut reassigned = 0u64;
    let mut monitor = GoodputMonitor::new(cfg.monitor_window, data.len() as u64);
    let mut monitor_started = false;
    let mut completed_at: Option<f64> = None;
    let window = cfg.arq.window.max(1);
    eng.start()?;

    loop {
        let now = eng.now;
        if now > cfg.max_time {
            return Err(SessionError::Timeout {
                at: now,
                diagnostic: format!("{held_count} of {chunk_count} chunks delivered, {} live paths", eng.live_paths()),
            });
        }
        for idx in eng.apply_churn(now)? {
            let lost = std::mem::take(&mut outstanding[idx]);
            reassigned += lost.len() as u64;
            for &c in lost.keys().rev() {
                queue.push_front(c);
            }
        }
        eng.handle_control(now)?;
        if eng.terminated {
            break;
        }
        if !monitor_started {
            if let Some(start) = eng.dissemination_start {
                monitor.start(start);
                monitor_started = true;
            }
        }

        for (idx, bytes) in eng.backward(now)? {
            match decode_ack(&bytes) {
                Ok(c) if (c as usize) < chunk_count => {
                    let c = c as usize;
                    acked[c] = true;
                    outstanding[idx].remove(&c);
                    for other in outstanding.iter_mut() {
                        other.remove(&c);
                    }
                    queue.retain(|&q| q != c);
                }
                _ => {}
            }
        }

        // Expired chunks: resend in place, or give up on the path after max_retries.
        for path in outstanding.iter_mut() {
            let spent: Vec<usize> = path
                .iter()
                .filter(|(_, o)| o.deadline <= now && o.retries >= cfg.arq.max_retries)
                .map(|(&c, _)| c)
                .collect();
            for c in spent.into_iter().rev() {
                path.remove(&c);
                queue.push_front(c);
                reassigned += 1;
            }
        }

        for idx in 0..eng.paths.len() {
            if !eng.paths[idx].active || !eng.paths[idx].hops[0].is_idle(now) {
                continue;
            }
            let resend = outstanding[idx].iter().find(|(_, o)| o.deadline <= now).map(|(&c, _)| c);
            let chunk = if let Some(c) = resend {
                let o = outstanding[idx].get_mut(&c).expect("present");
                o.retries += 1;
                o.deadline = f64::INFINITY;
                retransmissions += 1;
                c
            } else if outstanding[idx].len() < window {
                let Some(c) = queue.pop_front() else { continue };
                if acked[c] {
                    continue;
                }
                outstanding[idx].insert(c, Outstanding { deadline: f64::INFINITY, retries: 0 });
                c
            } else {
                continue;
            };
            let pkt = packet(chunk)?;
            eng.paths[idx].first_hop().send(&pkt, now)?;
            // The timer starts once the packet is fully on the wire.
            let done = eng.paths[idx].hops[0].idle_at();
            outstanding[idx].get_mut(&chunk).expect("present").deadline = done + timeouts[idx];
        }

        for (idx, bytes) in eng.forward(now)? {
            let pkt = match decode_data_packet(&bytes) {
                Ok(p) if p.version == VERSION_UNCODED && (p.seed as usize) < chunk_count && p.payload.len() == size => p,
                _ => {
                    malformed += 1;
                    continue;
                }
            };
            received += 1;
            let c = pkt.seed as usize;
            if held[c].is_none() {
                let useful = size.min(data.len() - c * size) as u64;
                held[c] = Some(pkt.payload);
                held_count += 1;
                monitor.credit(now, useful);
            } else {
                redundant += 1;
            }
            eng.paths[idx].reverse[0].send(&encode_ack(c as u64), now)?;
            if held_count == chunk_count && completed_at.is_none() {
                completed_at = Some(now);
                eng.ru_send(&ControlMessage::Terminate { client_id: RU_ID, file_id: FILE_ID }, now)?;
            }
        }

        let mut candidates: Vec<f64> = eng.next_event().into_iter().collect();
        for (idx, p) in eng.paths.iter().enumerate() {
            if !p.active {
                continue;
            }
            if let Some(d) = outstanding[idx].values().map(|o| o.deadline).filter(|&d| d > now).min_by(f64::total_cmp) {
                candidates.push(d);
            }
            let has_work = !queue.is_empty() || outstanding[idx].values().any(|o| o.deadline <= now);
            if has_work && p.hops[0].idle_at() > now {
                candidates.push(p.hops[0].idle_at());
            }
        }
        match candidates.into_iter().filter(|t| t.is_finite()).min_by(f64::total_cmp) {
            Some(t) => eng.now = t.max(now),
            None => {
                return Err(SessionError::Timeout {
                    at: now,
                    diagnostic: format!("no pending events: {held_count} of {chunk_count} chunks delivered"),
                })
            }
        }
    }

    let completed_at = completed_at.expect("terminate only follows completion");
    let start = eng.dissemination_start.unwrap_or(0.0);
    let completion_time = completed_at - start;
    let mut out: Vec<u8> = held.into_iter().flat_map(|c| c.expect("all held")).collect();
    out.truncate(data.len());
    Ok(SessionReport {
        mode: Mode::Arq,
        file_len: data.len() as u64,
        setup_time: start,
        completion_time,
        goodput: data.len() as f64 / completion_time,
        per_path: eng.path_reports(),
        total_overhead: received as f64 / chunk_count as f64 - 1.0,
        packets_received: received,
        redundant,
        malformed,
        timeline: monitor.timeline(),
        monitor_window: cfg.monitor_window,
        terminate_signals: eng.terminate_signals,
        control_messages: eng.control.sent(),
        retransmissions,
        reassigned,
        exact: out == data,
    })
}

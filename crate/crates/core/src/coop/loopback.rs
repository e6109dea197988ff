//! The LT data path over real UDP sockets on 127.0.0.1.
//!
//! One sender thread per path streams symbols from a shared
//! [`Dissemination`]; one receiver thread per path drains its socket into a
//! channel; a single consumer decodes and reports finished blocks back to
//! the senders.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::monitor::GoodputMonitor;
use super::receiver::{IngestOutcome, Receiver};
use super::session::Dissemination;
use super::SessionError;
use crate::channel::LoopbackTransport;
use crate::lt::{CodingParams, LtCode};
use crate::wire::encode_data_packet;

#[derive(Debug, Clone, Copy)]
pub struct LoopbackOptions {
    pub paths: usize,
    /// Per-path pacing in bytes per second; `None` sends as fast as the socket takes it.
    pub rate: Option<f64>,
    pub block_window: usize,
    pub session_seed: u64,
    pub deadline: Duration,
}

impl Default for LoopbackOptions {
    fn default() -> Self {
        Self { paths: 2, rate: Some(20e6), block_window: 4, session_seed: 1, deadline: Duration::from_secs(30) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopbackReport {
    pub elapsed: Duration,
    pub sent_per_path: Vec<u64>,
    pub received: u64,
    pub redundant: u64,
    pub exact: bool,
}

/// Transfers `data` over `opts.paths` loopback socket pairs and decodes it.
pub fn loopback_transfer(data: &[u8], coding: CodingParams, opts: LoopbackOptions) -> Result<LoopbackReport, SessionError> {
    let code = LtCode::new(coding)?;
    let (blocks, manifest) = code.segment(data)?;
    let source = Arc::new(Mutex::new(Dissemination::new(code.clone(), blocks, opts.session_seed, opts.block_window)));
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<Vec<u8>>();
    let started = Instant::now();

    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    for _ in 0..opts.paths.max(1) {
        let inbound = LoopbackTransport::bind(0)?;
        let mut outbound = LoopbackTransport::bind(0)?;
        outbound.connect(inbound.local_addr()?);

        let (tx, stop_rx) = (tx.clone(), stop.clone());
        receivers.push(thread::spawn(move || -> Result<(), SessionError> {
            while !stop_rx.load(Ordering::Relaxed) {
                match inbound.recv()? {
                    Some(p) => {
                        if tx.send(p).is_err() {
                            break;
                        }
                    }
                    None => thread::sleep(Duration::from_micros(50)),
                }
            }
            Ok(())
        }));

        let (source, stop_tx) = (source.clone(), stop.clone());
        let rate = opts.rate;
        senders.push(thread::spawn(move || -> Result<u64, SessionError> {
            let t0 = Instant::now();
            let mut bytes = 0f64;
            let mut sent = 0u64;
            while !stop_tx.load(Ordering::Relaxed) {
                let pkt = source.lock().expect("sender lock").next_packet();
                let Some(pkt) = pkt else {
                    thread::sleep(Duration::from_micros(200));
                    continue;
                };
                let wire = encode_data_packet(&pkt)?;
                outbound.send_datagram(&wire)?;
                sent += 1;
                bytes += wire.len() as f64;
                if let Some(r) = rate {
                    let due = Duration::from_secs_f64(bytes / r);
                    if let Some(wait) = due.checked_sub(t0.elapsed()) {
                        thread::sleep(wait);
                    }
                }
            }
            Ok(sent)
        }));
    }
    drop(tx);

    let mut receiver = Receiver::new(code, GoodputMonitor::new(1.0, manifest.total_len));
    receiver.monitor_mut().start(0.0);
    let mut outcome = Ok(());
    while !receiver.is_complete() {
        let left = opts.deadline.checked_sub(started.elapsed());
        let Some(left) = left else {
            outcome = Err(SessionError::Timeout {
                at: started.elapsed().as_secs_f64(),
                diagnostic: format!("{} of {} blocks decoded", receiver.completed_blocks(), manifest.block_count),
            });
            break;
        };
        let Ok(bytes) = rx.recv_timeout(left.min(Duration::from_millis(100))) else { continue };
        let now = started.elapsed().as_secs_f64();
        if let IngestOutcome::Progress { block_id, block_completed: true, .. } = receiver.ingest(&bytes, now) {
            source.lock().expect("ack lock").ack(block_id);
        }
    }
    let elapsed = started.elapsed();
    stop.store(true, Ordering::Relaxed);
    drop(rx);

    let mut sent_per_path = Vec::new();
    for h in senders {
        sent_per_path.push(h.join().expect("sender thread")?);
    }
    for h in receivers {
        h.join().expect("receiver thread")?;
    }
    outcome?;
    let out = receiver.assemble(manifest.total_len)?;
    Ok(LoopbackReport {
        elapsed,
        sent_per_path,
        received: receiver.received(),
        redundant: receiver.redundant(),
        exact: out == data,
    })
}

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::{trial_seed, Exec};
use crate::lt::{reassemble, CodingParams, LtCode, LtError, SeedStream, SourceBlock};

/// Pseudo-random payload reproducible from `seed`.
pub fn synthetic_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut buf = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut buf);
    buf
}

/// Streams fresh symbols of one random block into a decoder until it completes.
/// Returns the decoding overhead and whether the output matched the block.
pub fn block_trial(code: &LtCode, seed: u64) -> (f64, bool) {
    let p = code.params();
    let data = synthetic_bytes(p.block_bytes(), seed);
    let block = SourceBlock::new(0, p.symbol_size, data).expect("block size is positive");
    let mut seeds = SeedStream::new(seed, 0);
    let mut dec = code.decoder(0);
    loop {
        let sym = code.encode(&block, seeds.next_seed());
        if dec.push(&sym).expect("well-formed symbol").complete {
            break;
        }
    }
    let exact = dec.block_bytes().map(|b| b == block.as_bytes()).unwrap_or(false);
    (dec.overhead().expect("complete"), exact)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadCell {
    pub n: usize,
    pub symbol_size: usize,
    pub c: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_overhead: f64,
    pub stddev_overhead: f64,
    pub min_overhead: f64,
    pub max_overhead: f64,
    pub all_exact: bool,
}

pub fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean decoding overhead of `trials` independent blocks for one `(n, N)` cell.
pub fn overhead_cell(params: CodingParams, trials: usize, seed: u64, exec: Exec) -> Result<OverheadCell, LtError> {
    let code = LtCode::new(params)?;
    let cell_seed = seed ^ ((params.n as u64) << 20) ^ params.symbol_size as u64;
    let results = exec.map(trials, |i| block_trial(&code, trial_seed(cell_seed, i)));
    let overheads: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, sd) = mean_and_stddev(&overheads);
    Ok(OverheadCell {
        n: params.n,
        symbol_size: params.symbol_size,
        c: params.c,
        delta: params.delta,
        trials,
        seed,
        mean_overhead: mean,
        stddev_overhead: sd,
        min_overhead: overheads.iter().copied().fold(f64::INFINITY, f64::min),
        max_overhead: overheads.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        all_exact: results.iter().all(|r| r.1),
    })
}

/// Every `(n, N)` combination; cells run one after another, trials within a cell fan out.
pub fn overhead_matrix(
    ns: &[usize],
    sizes: &[usize],
    base: CodingParams,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<OverheadCell>, LtError> {
    let mut out = Vec::with_capacity(ns.len() * sizes.len());
    for &n in ns {
        for &symbol_size in sizes {
            out.push(overhead_cell(CodingParams { n, symbol_size, ..base }, trials, seed, exec)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputCell {
    pub n: usize,
    pub symbol_size: usize,
    pub trials: usize,
    pub decoded_bytes: u64,
    pub seconds: f64,
    pub bytes_per_second: f64,
}

/// Wall-clock decode throughput. Symbols are pre-encoded so only decoding is timed.
/// Always single-threaded so cells are comparable.
pub fn decode_throughput_cell(params: CodingParams, trials: usize, seed: u64) -> Result<ThroughputCell, LtError> {
    let code = LtCode::new(params)?;
    let mut decoded = 0u64;
    let mut elapsed = 0.0;
    for t in 0..trials {
        let s = trial_seed(seed, t);
        let data = synthetic_bytes(params.block_bytes(), s);
        let block = SourceBlock::new(0, params.symbol_size, data)?;
        let mut seeds = SeedStream::new(s, 0);
        // Enough symbols for any realistic overhead; decoding stops at completion.
        let symbols: Vec<_> = (0..params.n * 3 + 64).map(|_| code.encode(&block, seeds.next_seed())).collect();
        let mut dec = code.decoder(0);
        let start = Instant::now();
        for sym in &symbols {
            if dec.push(sym)?.complete {
                break;
            }
        }
        elapsed += start.elapsed().as_secs_f64();
        if dec.is_complete() {
            decoded += params.block_bytes() as u64;
        }
    }
    Ok(ThroughputCell {
        n: params.n,
        symbol_size: params.symbol_size,
        trials,
        decoded_bytes: decoded,
        seconds: elapsed,
        bytes_per_second: decoded as f64 / elapsed.max(1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripRow {
    pub n: usize,
    pub symbol_size: usize,
    pub message_len: usize,
    pub blocks: u32,
    pub symbols_used: usize,
    pub exact: bool,
}

/// Segment, encode over a lossless stream, decode and reassemble one message.
pub fn message_roundtrip(params: CodingParams, message_len: usize, seed: u64) -> Result<RoundtripRow, LtError> {
    let code = LtCode::new(params)?;
    let data = synthetic_bytes(message_len, seed);
    let (blocks, manifest) = code.segment(&data)?;
    let mut decoded = Vec::with_capacity(blocks.len());
    let mut used = 0;
    for block in &blocks {
        let mut seeds = SeedStream::new(seed, block.block_id());
        let mut dec = code.decoder(block.block_id());
        while !dec.is_complete() {
            dec.push(&code.encode(block, seeds.next_seed()))?;
        }
        used += dec.received_count();
        decoded.push(dec.block_bytes()?);
    }
    let out = reassemble(&decoded, &manifest)?;
    Ok(RoundtripRow {
        n: params.n,
        symbol_size: params.symbol_size,
        message_len,
        blocks: manifest.block_count,
        symbols_used: used,
        exact: out == data,
    })
}

use std::sync::Arc;

use super::{neighbors_from_seed, xor_into, DegreeDistribution, EncodedSymbol, LtError};

/// Outcome of one push.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub recovered_count: usize,
    /// Sources recovered by this push (zero for redundant symbols).
    pub newly_recovered: usize,
    pub complete: bool,
}

#[derive(Debug, Clone)]
struct Pending {
    neighbors: Vec<u32>,
    payload: Vec<u8>,
}

/// Peeling decoder for one block.
#[derive(Debug, Clone)]
pub struct DecoderState {
    block_id: u32,
    n: usize,
    symbol_size: usize,
    dist: Arc<DegreeDistribution>,
    recovered: Vec<Option<Vec<u8>>>,
    recovered_count: usize,
    pending: Vec<Option<Pending>>,
    // source index -> pending slots that still reference it
    waiting_on: Vec<Vec<usize>>,
    received_count: usize,
    received_at_completion: Option<usize>,
}

impl DecoderState {
    pub fn new(block_id: u32, n: usize, symbol_size: usize, dist: Arc<DegreeDistribution>) -> Self {
        assert_eq!(dist.n(), n, "distribution does not cover n degrees");
        Self {
            block_id,
            n,
            symbol_size,
            dist,
            recovered: vec![None; n],
            recovered_count: 0,
            pending: Vec::new(),
            waiting_on: vec![Vec::new(); n],
            received_count: 0,
            received_at_completion: None,
        }
    }

    pub fn block_id(&self) -> u32 {
        self.block_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn received_count(&self) -> usize {
        self.received_count
    }

    pub fn recovered_count(&self) -> usize {
        self.recovered_count
    }

    pub fn is_complete(&self) -> bool {
        self.recovered_count == self.n
    }

    /// Buffered symbols still of reduced degree two or more.
    pub fn pending_count(&self) -> usize {
        self.pending.iter().filter(|p| p.is_some()).count()
    }

    pub fn recovered_symbol(&self, i: usize) -> Option<&[u8]> {
        self.recovered.get(i)?.as_deref()
    }

    /// Reduces a received symbol by its seed-derived neighbor set.
    pub fn push(&mut self, sym: &EncodedSymbol) -> Result<Progress, LtError> {
        if sym.block_id != self.block_id {
            return Err(LtError::InvalidSymbol(format!(
                "symbol for block {} pushed into decoder for block {}",
                sym.block_id, self.block_id
            )));
        }
        self.check_len(sym.payload.len())?;
        if self.is_complete() {
            self.received_count += 1;
            return Ok(self.progress(0));
        }
        let neighbors = neighbors_from_seed(sym.seed, self.n, &self.dist);
        Ok(self.absorb(&neighbors, &sym.payload))
    }

    /// Pushes an equation with an explicit neighbor set.
    pub fn push_equation(&mut self, neighbors: &[u32], payload: &[u8]) -> Result<Progress, LtError> {
        self.check_len(payload.len())?;
        if let Some(&bad) = neighbors.iter().find(|&&i| i as usize >= self.n) {
            return Err(LtError::InvalidSymbol(format!("neighbor {bad} out of range")));
        }
        let mut sorted = neighbors.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != neighbors.len() {
            return Err(LtError::InvalidSymbol("duplicate neighbor index".into()));
        }
        if self.is_complete() {
            self.received_count += 1;
            return Ok(self.progress(0));
        }
        Ok(self.absorb(&sorted, payload))
    }

    fn check_len(&self, len: usize) -> Result<(), LtError> {
        if len != self.symbol_size {
            return Err(LtError::InvalidSymbol(format!(
                "payload of {len} bytes, expected {}",
                self.symbol_size
            )));
        }
        Ok(())
    }

    fn progress(&self, newly_recovered: usize) -> Progress {
        Progress {
            recovered_count: self.recovered_count,
            newly_recovered,
            complete: self.is_complete(),
        }
    }

    fn absorb(&mut self, neighbors: &[u32], payload: &[u8]) -> Progress {
        self.received_count += 1;
        let mut payload = payload.to_vec();
        let mut open = Vec::with_capacity(neighbors.len());
        for &i in neighbors {
            match &self.recovered[i as usize] {
                Some(value) => xor_into(&mut payload, value),
                None => open.push(i),
            }
        }
        let before = self.recovered_count;
        match open.len() {
            0 => {}
            1 => self.peel(open[0], payload),
            _ => {
                let slot = self.pending.len();
                for &i in &open {
                    self.waiting_on[i as usize].push(slot);
                }
                self.pending.push(Some(Pending { neighbors: open, payload }));
            }
        }
        if self.is_complete() && self.received_at_completion.is_none() {
            self.received_at_completion = Some(self.received_count);
            self.pending.clear();
            self.waiting_on.iter_mut().for_each(Vec::clear);
        }
        self.progress(self.recovered_count - before)
    }

    /// Recovers `source` and cascades through every pending symbol it releases.
    fn peel(&mut self, source: u32, value: Vec<u8>) {
        let mut ripple = vec![(source, value)];
        while let Some((s, v)) = ripple.pop() {
            let s = s as usize;
            if self.recovered[s].is_some() {
                continue;
            }
            for slot in std::mem::take(&mut self.waiting_on[s]) {
                let Some(p) = self.pending[slot].as_mut() else { continue };
                xor_into(&mut p.payload, &v);
                p.neighbors.retain(|&x| x as usize != s);
                if p.neighbors.len() == 1 {
                    let p = self.pending[slot].take().unwrap();
                    ripple.push((p.neighbors[0], p.payload));
                }
            }
            self.recovered[s] = Some(v);
            self.recovered_count += 1;
        }
    }

    /// Fraction of extra symbols needed: `received / n - 1` at completion.
    pub fn overhead(&self) -> Result<f64, LtError> {
        let received = self.received_at_completion.ok_or(LtError::NotReady)?;
        Ok(received as f64 / self.n as f64 - 1.0)
    }

    /// Symbols received when the last source was recovered.
    pub fn symbols_to_complete(&self) -> Option<usize> {
        self.received_at_completion
    }

    /// The decoded block, symbols concatenated in index order.
    pub fn block_bytes(&self) -> Result<Vec<u8>, LtError> {
        if !self.is_complete() {
            return Err(LtError::NotReady);
        }
        let mut out = Vec::with_capacity(self.n * self.symbol_size);
        for s in &self.recovered {
            out.extend_from_slice(s.as_ref().unwrap());
        }
        Ok(out)
    }
}

//! LT fountain coding: soliton degree distributions, seeded encoding, peeling
//! decoding and message segmentation into fixed-size source blocks.

mod decoder;
mod encoder;
pub mod prng;
mod segment;
mod soliton;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decoder::{DecoderState, Progress};
pub use encoder::{encode_symbol, neighbors_from_seed, xor_into, EncodedSymbol, SeedStream};
pub use segment::{reassemble, segment_message, Manifest, SourceBlock};
pub use soliton::{
    ideal_soliton, robust_soliton, DegreeDistribution, SolitonParams, DEFAULT_C, DEFAULT_DELTA,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("decoding has not completed")]
    NotReady,
}

/// Coding parameters shared by sender and receiver of one transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodingParams {
    /// Source symbols per block.
    pub n: usize,
    /// Bytes per symbol.
    pub symbol_size: usize,
    pub c: f64,
    pub delta: f64,
}

impl Default for CodingParams {
    fn default() -> Self {
        Self { n: 64, symbol_size: 1024, c: DEFAULT_C, delta: DEFAULT_DELTA }
    }
}

impl CodingParams {
    pub fn new(n: usize, symbol_size: usize) -> Self {
        Self { n, symbol_size, ..Self::default() }
    }

    pub fn soliton(&self) -> Result<SolitonParams, LtError> {
        SolitonParams::new(self.n, self.c, self.delta)
    }

    pub fn block_bytes(&self) -> usize {
        self.n * self.symbol_size
    }
}

/// A ready-to-use code: parameters plus the precomputed robust soliton.
#[derive(Debug, Clone)]
pub struct LtCode {
    params: CodingParams,
    dist: Arc<DegreeDistribution>,
}

impl LtCode {
    pub fn new(params: CodingParams) -> Result<Self, LtError> {
        if params.symbol_size == 0 {
            return Err(LtError::InvalidParameter("symbol_size must be positive".into()));
        }
        let dist = robust_soliton(params.soliton()?)?;
        Ok(Self { params, dist: Arc::new(dist) })
    }

    /// Uses a caller-supplied distribution (e.g. the ideal soliton) instead of the robust one.
    pub fn with_distribution(params: CodingParams, dist: DegreeDistribution) -> Result<Self, LtError> {
        if dist.n() != params.n {
            return Err(LtError::InvalidParameter(format!(
                "distribution covers {} degrees, expected {}",
                dist.n(),
                params.n
            )));
        }
        if params.symbol_size == 0 {
            return Err(LtError::InvalidParameter("symbol_size must be positive".into()));
        }
        Ok(Self { params, dist: Arc::new(dist) })
    }

    pub fn params(&self) -> &CodingParams {
        &self.params
    }

    pub fn distribution(&self) -> &DegreeDistribution {
        &self.dist
    }

    pub fn encode(&self, block: &SourceBlock, seed: u64) -> EncodedSymbol {
        encode_symbol(block, seed, &self.dist)
    }

    pub fn decoder(&self, block_id: u32) -> DecoderState {
        DecoderState::new(block_id, self.params.n, self.params.symbol_size, Arc::clone(&self.dist))
    }

    pub fn segment(&self, data: &[u8]) -> Result<(Vec<SourceBlock>, Manifest), LtError> {
        segment_message(data, self.params.n, self.params.symbol_size)
    }
}

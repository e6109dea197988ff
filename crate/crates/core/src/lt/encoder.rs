use super::prng::SplitMix64;
use super::{DegreeDistribution, SourceBlock};

/// One rateless packet body: which block, how its neighbors were drawn, and the XOR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSymbol {
    pub block_id: u32,
    pub seed: u64,
    pub payload: Vec<u8>,
}

/// `dst ^= src` over the common prefix.
#[inline]
pub fn xor_into(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Degree and sorted distinct source indices for `seed`.
///
/// Draw order on a `SplitMix64` seeded with `seed`: one `f64` for the degree
/// (inverse cdf, capped at `n`), then Floyd's subset sampling for
/// `j in n-d .. n`, each step drawing `next_below(j + 1)`.
pub fn neighbors_from_seed(seed: u64, n: usize, dist: &DegreeDistribution) -> Vec<u32> {
    assert!(n >= 1, "n must be at least 1");
    let mut rng = SplitMix64::new(seed);
    let degree = dist.degree_for(rng.next_f64()).clamp(1, n);
    let mut chosen: Vec<u32> = Vec::with_capacity(degree);
    let mut taken = if degree > 32 { vec![false; n] } else { Vec::new() };
    for j in (n - degree)..n {
        let t = rng.next_below(j as u64 + 1) as usize;
        let pick = if taken.is_empty() {
            if chosen.contains(&(t as u32)) { j } else { t }
        } else if taken[t] {
            j
        } else {
            t
        };
        if !taken.is_empty() {
            taken[pick] = true;
        }
        chosen.push(pick as u32);
    }
    chosen.sort_unstable();
    chosen
}

/// XOR of the neighbor-selected source symbols of `block`.
pub fn encode_symbol(block: &SourceBlock, seed: u64, dist: &DegreeDistribution) -> EncodedSymbol {
    let mut payload = vec![0u8; block.symbol_size()];
    for i in neighbors_from_seed(seed, block.n(), dist) {
        xor_into(&mut payload, block.symbol(i as usize));
    }
    EncodedSymbol { block_id: block.block_id(), seed, payload }
}

/// Never-repeating per-block seeds.
///
/// SplitMix64 outputs are a bijection of a state that advances by a fixed odd
/// constant, so no value repeats within 2^64 draws.
#[derive(Debug, Clone)]
pub struct SeedStream {
    inner: SplitMix64,
}

impl SeedStream {
    pub fn new(session_seed: u64, block_id: u32) -> Self {
        let mut mixer = SplitMix64::new(session_seed ^ ((block_id as u64) << 32 | block_id as u64));
        Self { inner: SplitMix64::new(mixer.next_u64()) }
    }

    pub fn next_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

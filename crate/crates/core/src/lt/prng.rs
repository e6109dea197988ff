//! Seeded generator shared by encoder and decoder.
//!
//! The byte-for-byte mapping from a 64-bit seed to a degree and a neighbor
//! set is part of the wire contract (packet version 1), see
//! `docs/PROTOCOL.md`. Any change here is a protocol change.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 stream (Steele, Lea, Flood 2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection of the biased tail.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // Largest multiple of `bound` that fits, computed as 2^64 - (2^64 mod bound).
        let reject_from = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= reject_from {
                return x % bound;
            }
        }
    }
}

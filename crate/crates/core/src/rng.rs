//! Counter-based random bits: every draw is a hash of a key and a tuple of
//! counters, so any draw can be recomputed from its coordinates alone.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed hash of `u64` tuples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyedHash {
    key: u64,
}

impl KeyedHash {
    pub fn new(seed: u64) -> Self {
        KeyedHash { key: mix64(seed ^ GOLDEN) }
    }

    /// An independent key for a sub-stream labelled `tag`.
    pub fn with(self, tag: u64) -> Self {
        KeyedHash { key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN))) }
    }

    pub fn at(&self, words: &[u64]) -> u64 {
        let mut h = self.key;
        for (i, &w) in words.iter().enumerate() {
            h = mix64(h ^ mix64(w.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))));
        }
        h
    }
}

/// Uniform in `[0, 1)` from the top 53 bits.
pub fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

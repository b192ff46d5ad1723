//! Counter-based keyed random streams.
//!
//! Randomness that must not depend on evaluation order (coin flips inside
//! Multi-Rank, per-user transforms) is drawn from a stream keyed by a tuple of
//! words. Two streams with the same key produce the same sequence no matter
//! which thread asks or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a single 64-bit key.
#[inline]
pub fn derive_key(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0xD134_2543_DE82_EF95);
    for (n, &w) in words.iter().enumerate() {
        h = mix64(h ^ mix64(w.wrapping_add(GOLDEN.wrapping_mul(n as u64 + 1))));
    }
    h
}

/// A random stream identified by a key. `next_u64` advances a counter and
/// hashes `(key, counter)`.
#[derive(Debug, Clone)]
pub struct KeyedStream {
    key: u64,
    counter: u64,
}

impl KeyedStream {
    pub fn new(seed: u64, words: &[u64]) -> Self {
        Self {
            key: derive_key(seed, words),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

/// Fair coin keyed by `(seed, user, item_i, item_j)`.
#[inline]
pub fn keyed_coin(seed: u64, user: usize, i: usize, j: usize) -> bool {
    KeyedStream::new(seed, &[user as u64, i as u64, j as u64]).next_u64() >> 63 == 1
}

/// Sequential generator seeded from a keyed derivation, for the places where
/// a stream-ordered RNG is the natural fit (model sampling, shuffles).
pub fn seeded_rng(seed: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, words))
}

//! Deterministic, splittable random streams.
//!
//! Every randomized operation takes an explicit 64-bit seed and derives a
//! ChaCha stream from it. Substreams (per group, per step, per trial) are
//! labelled with additional words so that distinct labels give independent
//! streams and the same labels always reproduce the same draws, on any
//! platform.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer. Stateless: maps one word to a well-mixed word.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha stream from a label sequence.
///
/// The labels are absorbed in order, so `[seed]`, `[seed, 0]`, and
/// `[0, seed]` all yield distinct streams.
pub fn stream(labels: &[u64]) -> ChaCha12Rng {
    let mut acc = 0xa076_1d64_78bd_642f_u64;
    for &label in labels {
        acc = splitmix64(acc ^ label);
        acc = splitmix64(acc);
    }
    let mut key = [0u8; 32];
    let mut word = acc;
    for chunk in key.chunks_exact_mut(8) {
        word = splitmix64(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Unbiased integer in `[0, bound)` by rejection sampling on raw words.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    assert!(bound > 0, "bound must be positive");
    if bound == 1 {
        return 0;
    }
    let bound = bound as u64;
    // Largest multiple of `bound` that fits in u64; draws at or above it
    // would bias the remainder and are rejected.
    let zone = (u64::MAX / bound) * bound;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % bound) as usize;
        }
    }
}

/// Uniform f64 in `[0, 1)` built from the top 53 bits of one word.
pub fn uniform_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (rng.next_u64() >> 11) as f64 * SCALE
}

/// In-place unbiased Fisher–Yates shuffle driven by the given stream.
pub fn fisher_yates<T, R: RngCore + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(rng, i + 1);
        items.swap(i, j);
    }
}

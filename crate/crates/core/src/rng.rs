//! Seed handling shared by all randomized operations.
//!
//! A batch is driven by one 64-bit seed. Each task derives its own seed from that value and a
//! fixed label, and item `i` of the task draws from ChaCha stream `i` of the derived seed, so
//! outputs depend only on (seed, label, index).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for the task named `label`: splitmix64 of the seed xor the FNV-1a hash of the label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = (seed ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[lo, hi)`; exactly `lo` when the range is degenerate. Always consumes
/// one draw so that stream positions do not depend on the ranges.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Uniform draw in `[-r, r)`.
pub fn symmetric<R: Rng + ?Sized>(rng: &mut R, r: f64) -> f64 {
    let u: f64 = rng.random();
    if r == 0.0 {
        0.0
    } else {
        r * (2.0 * u - 1.0)
    }
}

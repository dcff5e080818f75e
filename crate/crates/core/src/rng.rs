//! Portable seeded randomness.
//!
//! All randomness in the toolkit comes from xoshiro256** seeded through
//! SplitMix64 (`Xoshiro256StarStar::seed_from_u64`). Uniform reals take the top
//! 53 bits of a 64-bit draw, so streams reproduce bit-for-bit on every
//! platform.

use rand::{RngCore, SeedableRng};
pub use rand_xoshiro::Xoshiro256StarStar as Rng;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)`.
pub fn unit(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_M53
}

/// Uniform in `[-limit, limit)`.
pub fn symmetric(rng: &mut Rng, limit: f64) -> f64 {
    (2.0 * unit(rng) - 1.0) * limit
}

/// Standard normal draw by the Box-Muller transform (cosine branch).
pub fn standard_normal(rng: &mut Rng) -> f64 {
    let u1 = 1.0 - unit(rng);
    let u2 = unit(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a stream seed from a root seed and an ordered key. The result
/// depends only on the inputs, never on how many draws happened elsewhere.
pub fn keyed_seed(seed: u64, key: &[u64]) -> u64 {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &k in key {
        h = mix(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ k);
    }
    h
}

/// One standard-normal draw addressed by `key` under `seed`.
pub fn keyed_normal(seed: u64, key: &[u64]) -> f64 {
    standard_normal(&mut seeded(keyed_seed(seed, key)))
}

//! Seed derivation. Every pseudo-random object in the crate is a pure
//! function of an explicit `u64` seed; nothing reads ambient entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a seed.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Folds a bit sequence (with its length) into a seed.
pub fn derive_bits(seed: u64, tag: u64, bits: &[bool]) -> u64 {
    let mut acc = derive(seed, &[tag, bits.len() as u64]);
    for chunk in bits.chunks(64) {
        let word = chunk.iter().fold(0u64, |w, &b| (w << 1) | b as u64);
        acc = mix64(acc ^ word);
    }
    acc
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

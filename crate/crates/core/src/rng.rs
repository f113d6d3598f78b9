//! Seed mixing and stream derivation.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a 64-bit
//! value derived by [`derive_seed`], so that the same master seed produces
//! the same numbers on every platform and regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a seed. Order matters.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master), |h, &p| mix64(h ^ p))
}

/// Hashes a label so that it can be used as a part in [`derive_seed`].
pub fn label(name: &str) -> u64 {
    // FNV-1a; only needs to be stable, not strong.
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn stream(master: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, parts))
}

/// Maps the top 53 bits of a hash onto `[0, 1)`.
#[inline]
pub fn unit_interval(hash: u64) -> f64 {
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

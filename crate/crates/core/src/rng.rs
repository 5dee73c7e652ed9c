//! Seed derivation. Every random stream is a ChaCha8 generator keyed by a
//! hash of `(seed, stream id)`, so replicates can run in any order or in
//! parallel and still reproduce exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `id` of `seed`.
pub fn derive_seed(seed: u64, id: u64) -> u64 {
    mix(mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ id.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Generator for stream `id` of `seed`.
pub fn substream(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, id))
}

//! Seed derivation for per-record random streams.
//!
//! Every randomized operation derives its generator from a master seed and a
//! record key (annotation id, image id), so results do not depend on the order
//! or the thread in which records are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a master seed with a record key (splitmix64 finalizer over both).
pub fn derive_seed(master: u64, key: u64) -> u64 {
    let mut z = master ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(master: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, key))
}

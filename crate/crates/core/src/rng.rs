//! Seeded random streams, one per replication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every simulator in the crate.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer. Distinct inputs map to well-separated outputs, so
/// consecutive replication indices give unrelated seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for replication `index` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(seed.wrapping_add(index)))
}

/// Stream for a single run.
pub fn rng_from_seed(seed: u64) -> SimRng {
    replication_rng(seed, 0)
}

//! Deterministic seeded substreams.
//!
//! Every stochastic component takes an explicit seed and derives independent
//! substreams by mixing the seed with counter values (training step, query
//! index, group index). Substreams are counter-based, so concurrent workers
//! draw from disjoint, reproducible streams regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive the seed for substream `(lane, index)` of a master seed.
pub fn substream_seed(seed: u64, lane: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(lane ^ splitmix64(index)))
}

/// Deterministic generator for substream `(lane, index)` of a master seed.
pub fn substream(seed: u64, lane: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, lane, index))
}

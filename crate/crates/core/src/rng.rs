//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PlannerRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with a path of indices into a new seed.
///
/// Distinct paths yield unrelated streams; the path length is mixed in so
/// that `[0]` and `[0, 0]` differ.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ (path.len() as u64).wrapping_mul(0xa076_1d64_78bd_642f));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

pub fn seeded(seed: u64) -> PlannerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

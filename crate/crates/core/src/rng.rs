//! Seeded, splittable random streams.
//!
//! Every independent unit of work (a replicate network, a cluster inside a
//! BA network, a restart of a fit) draws from its own ChaCha stream derived
//! from the root seed and a path of integers, so parallel scheduling never
//! changes results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `path` into `seed`; distinct paths give unrelated seeds.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &step| {
        splitmix64(acc ^ splitmix64(step.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, path))
}

//! Seeded random sources.
//!
//! Parallel work never shares a generator. Each task gets its own ChaCha
//! stream whose seed is a hash of the master seed and a tag path such as
//! `(stage, kernel_rank)` or `(generation, index)`, so results depend only on
//! the master seed and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for `tags` under `master`.
pub fn substream(master: u64, tags: &[u64]) -> SeededRng {
    let mut h = splitmix64(master ^ 0x5851_f42d_4c95_7f2d);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x2545_f491_4f6c_dd1d)));
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Seed handling.
//!
//! Every trial `t` of a Monte Carlo loop draws from ChaCha8 stream `t` of the
//! loop's seed, so results do not depend on scheduling. Sub-seeds for
//! independent tasks come from [`derive_seed`], which mixes a master seed
//! with a task tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for trial `trial` of a loop seeded by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `splitmix64(master ^ fnv1a(tag))`.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

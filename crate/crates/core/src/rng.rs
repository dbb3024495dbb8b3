//! Seeded randomness shared by every probe.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ProbeRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ProbeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

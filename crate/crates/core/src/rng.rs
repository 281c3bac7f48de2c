use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere a seed is accepted. ChaCha keeps streams stable
/// across platforms and crate versions.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seeded, portable randomness. Every generator draws from its own ChaCha
//! stream so that the number of draws made by one generator never shifts
//! the values produced by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers, one per sub-generator.
pub mod streams {
    pub const BASIS: u64 = 1;
    pub const COEFFS: u64 = 2;
    pub const SUPPORT: u64 = 3;
    pub const MAGNITUDE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const MASK: u64 = 6;
    pub const FACTOR_V: u64 = 7;
    pub const PARTITION: u64 = 8;
    pub const GROUSE_INIT: u64 = 9;
    /// Rotation generator `B_j` uses `ROTATION + j`.
    pub const ROTATION: u64 = 1 << 16;
    /// Segment-specific draws use `base + SEGMENT * segment`.
    pub const SEGMENT: u64 = 1 << 32;
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

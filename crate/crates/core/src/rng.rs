//! Seeded random streams.
//!
//! Every consumer of randomness derives its own ChaCha8 stream from
//! `(seed, stream)`. ChaCha is counter based, so streams are independent and
//! the output never depends on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand::Rng;

/// Stream identifiers used across the crate. Keeping them in one place avoids
/// two subsystems accidentally sharing a stream.
pub mod streams {
    pub const INIT: u64 = 0x1000;
    pub const SHUFFLE: u64 = 0x2000;
    pub const GAUSSIAN: u64 = 0x3000;
    pub const PIXEL_PAIRS: u64 = 0x4000;
    pub const PATCH_BATCH: u64 = 0x5000;
    pub const PATCH_IMAGE: u64 = 0x6000;
    pub const CORPUS: u64 = 0x7000;
    pub const GRADCHECK: u64 = 0x8000;
    pub const ANCHORS: u64 = 0x9000;
    pub const HOLDOUT: u64 = 0xA000;
}

/// Returns the random stream for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream keyed by a base stream id plus a sub index (e.g. an image or epoch index).
pub fn substream(seed: u64, base: u64, index: u64) -> ChaCha8Rng {
    // 2^20 sub indices per base id
    stream(seed, (base << 20) ^ index)
}

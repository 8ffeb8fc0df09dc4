//! Seeded random streams for the augmentation pipeline.
//!
//! A sample's draws come from ChaCha8 keyed by the sample seed. Each
//! augmentation reads from its own ChaCha stream id, so enabling or disabling
//! one augmentation never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent draw streams, one per augmentation decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Mixup = 1,
    Rotate = 2,
    Flip = 3,
    Crop = 4,
    ArbitraryRotate = 5,
    /// Reserved for callers choosing a MixUp partner.
    Partner = 6,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed: `splitmix64(seed ^ (index * 0x9E3779B97F4A7C15))`.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

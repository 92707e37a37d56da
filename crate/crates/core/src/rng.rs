//! Counter-based, splittable random streams.
//!
//! A [`RandomStream`] is a 64-bit key. Child streams are derived by hashing
//! the parent key together with a tag, so any consumer can reach its private
//! stream from `(master seed, tag path)` without touching shared state. Draws
//! come from ChaCha8 keyed by the stream, which is itself counter based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags used when splitting streams.
pub mod tags {
    pub const REPLICATION: u64 = 0x5245_504c;
    pub const ROW: u64 = 0x524f_5700;
    pub const MULTIPLIER: u64 = 0x4d55_4c54;
    pub const DRIVER: u64 = 0x4452_4956;
    pub const DIRECT: u64 = 0x4449_5243;
    pub const SWEEP: u64 = 0x5357_4550;
    pub const REFERENCE: u64 = 0x5245_4651;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    key: u64,
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            key: mix64(master_seed),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Derives an independent child stream for `tag`.
    pub fn split(&self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_add(0x6a09_e667_f3bc_c909))),
        }
    }

    /// Child stream for `(purpose, index)`.
    pub fn substream(&self, purpose: u64, index: u64) -> Self {
        self.split(purpose).split(index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

//! Counter-based, splittable random streams.
//!
//! A stream is addressed by `(seed, stream_index)`. Generators are ChaCha8
//! keyed by the seed with the stream index selecting the ChaCha stream, so
//! any worker can materialise any stream without coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Derived stream for a named sub-task. Children with different tags
    /// (or of different parents) never share a key.
    pub fn child(&self, tag: u64) -> RngStream {
        let key = splitmix64(
            splitmix64(self.seed ^ 0x6a09_e667_f3bc_c909)
                ^ splitmix64(self.stream_index.wrapping_add(0xbb67_ae85_84ca_a73b)),
        );
        RngStream {
            seed: splitmix64(key ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            stream_index: tag,
        }
    }

    /// The `i`-th stream under the same seed.
    pub fn with_index(&self, stream_index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

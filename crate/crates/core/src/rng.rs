//! Counter-based random substreams.
//!
//! Every random draw in the crate flows from a [`Stream`]: a 64-bit key that
//! can be refined with further integer labels (`stream.child(n).child(r)`).
//! A stream is turned into a generator only at the leaf of the derivation, so
//! the numbers a replicate or a tree sees depend on its labels and never on
//! the order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed out by [`Stream::rng`].
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A node in the substream derivation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix64(seed) }
    }

    /// Derive the substream labelled `label`.
    pub fn child(self, label: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    /// Derive a substream from a string label (used for named purposes such as
    /// "dataset" or "forest").
    pub fn named(self, label: &str) -> Self {
        // FNV-1a, stable across platforms and releases.
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01B3);
        }
        self.child(h)
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut z = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

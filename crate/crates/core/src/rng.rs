//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed and a 64-bit stream id. ChaCha is counter based, so the
//! stream for task `k` does not depend on how many other tasks ran before it
//! or on which worker thread runs it.
//!
//! Derivation rules:
//! * `Substreams::new(seed)` keys the generator with `seed`.
//! * `Substreams::stream(task)` selects ChaCha stream `task`.
//! * `Substreams::child(label)` derives a new seed as
//!   `splitmix64(seed ^ fnv1a64(label))`, giving each experiment its own key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substreams {
    seed: u64,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, task: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(task);
        rng
    }

    pub fn child(&self, label: &str) -> Substreams {
        Substreams {
            seed: splitmix64(self.seed ^ fnv1a64(label.as_bytes())),
        }
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

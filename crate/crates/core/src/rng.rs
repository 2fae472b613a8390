//! Counter-based random substreams.
//!
//! Every random draw in the simulator comes from a ChaCha8 stream whose key
//! is derived from `(scenario seed, domain, a, b, c)`. Sequential state
//! (traffic spawning, spray emission) uses one long-lived stream per domain;
//! per-ray and per-point draws open a fresh stream keyed by
//! `(frame, channel, azimuth)` so they can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Scene = 0x5343_454e,
    Spray = 0x5350_5259,
    RayIntercept = 0x494e_5443,
    RayDrop = 0x4452_4f50,
    SprayIntensity = 0x494e_5453,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 256-bit ChaCha key from the stream coordinates.
pub fn stream_key(seed: u64, domain: Domain, a: u64, b: u64, c: u64) -> [u8; 32] {
    let mut h = mix64(seed ^ mix64(domain as u64));
    h = mix64(h ^ a);
    h = mix64(h ^ b.rotate_left(21));
    h = mix64(h ^ c.rotate_left(42));
    let mut key = [0u8; 32];
    let mut w = h;
    for chunk in key.chunks_exact_mut(8) {
        w = mix64(w);
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    key
}

pub fn substream(seed: u64, domain: Domain, a: u64, b: u64, c: u64) -> SimRng {
    SimRng::from_seed(stream_key(seed, domain, a, b, c))
}

/// A per-ray stream that is only instantiated on first use, so code paths
/// that never draw leave no trace of the seed.
pub struct LazyRng {
    key: [u8; 32],
    rng: Option<SimRng>,
}

impl LazyRng {
    pub fn new(seed: u64, domain: Domain, a: u64, b: u64, c: u64) -> Self {
        Self {
            key: stream_key(seed, domain, a, b, c),
            rng: None,
        }
    }

    pub fn get(&mut self) -> &mut SimRng {
        let key = self.key;
        self.rng.get_or_insert_with(|| SimRng::from_seed(key))
    }

    pub fn was_used(&self) -> bool {
        self.rng.is_some()
    }
}

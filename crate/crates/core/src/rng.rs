//! Counter-based random streams.
//!
//! Every random decision in the crate draws from a [`Stream`] addressed by a
//! root seed and a short tuple of coordinates, e.g. `(TIE_BREAK, iteration,
//! point)`. A stream's output depends only on its address, never on which
//! thread asks for it or in what order, so parallel and sequential runs
//! consume identical randomness.
//!
//! The generator is SplitMix64 evaluated at `key + counter * GAMMA`, which is
//! counter-based by construction.

use rand::RngCore;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a root seed together with a coordinate tuple into a 64-bit key.
pub fn derive(root: u64, coords: &[u64]) -> u64 {
    let mut h = mix64(root ^ 0x6A09_E667_F3BC_C908);
    for (i, &c) in coords.iter().enumerate() {
        let lane = c.wrapping_add(GAMMA.wrapping_mul(i as u64 + 1));
        h = mix64(h ^ mix64(lane)).wrapping_add(GAMMA);
    }
    h
}

/// Stream purposes. Kept as plain constants so that they can be mixed into
/// coordinate tuples without conversions.
pub mod purpose {
    pub const SEEDING: u64 = 1;
    pub const TIE_BREAK: u64 = 2;
    pub const CENTER_SAMPLE: u64 = 3;
    pub const RESEED: u64 = 4;
    pub const GENERATE_ROW: u64 = 5;
    pub const GENERATE_CENTER: u64 = 6;
    pub const GENERATE_LABEL: u64 = 7;
    pub const SHUFFLE: u64 = 8;
    pub const EPOCH: u64 = 9;
    pub const DATASET: u64 = 10;
}

/// A root seed from which independent streams are addressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Streams {
    root: u64,
}

impl Streams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, coords: &[u64]) -> Stream {
        Stream::from_key(derive(self.root, coords))
    }

    /// A child seed, e.g. for an epoch of an experiment.
    pub fn child(&self, coords: &[u64]) -> Streams {
        Streams::new(derive(self.root, coords))
    }
}

/// One random stream. Implements [`RngCore`] so the usual `rand` helpers apply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn from_key(key: u64) -> Self {
        Self { key, counter: 0 }
    }
}

impl RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

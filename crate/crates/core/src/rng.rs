//! Counter-based random streams.
//!
//! Every random quantity in a simulation is addressed by
//! `(seed, stream tag, path index, block index)`. The address is hashed into
//! a ChaCha8 key, so any path can be regenerated in isolation and results do
//! not depend on how paths are scheduled across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct sequences of a path never share random numbers.
pub mod tag {
    pub const CLAIMS: u64 = 0x01;
    pub const ARRIVALS: u64 = 0x02;
    pub const TAU: u64 = 0x03;
    pub const PAIRS: u64 = 0x04;
    pub const AUX: u64 = 0x05;
    pub const SUMS: u64 = 0x06;
    pub const STRATA: u64 = 0x07;
    pub const DEPENDENCE: u64 = 0x08;
}

/// Number of sequence elements sharing one derived generator.
pub const BLOCK_LEN: usize = 4096;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64, index: u64, block: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ tag.wrapping_mul(0xA076_1D64_78BD_642F));
    h = splitmix64(h ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    splitmix64(h ^ block.wrapping_mul(0x8EBC_6AF0_9C88_C6E3))
}

pub fn stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tag, index, 0))
}

/// Uniform on (0, 1]; safe to feed into tail quantiles and logarithms.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Uniform draw on the open interval `(0, 1)`.
#[inline]
pub fn interior_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A lazily consumed sequence stream whose generator is re-derived every
/// [`BLOCK_LEN`] elements from `(seed, tag, index, block)`.
#[derive(Debug, Clone)]
pub struct BlockedStream {
    seed: u64,
    tag: u64,
    index: u64,
    position: usize,
    block: u64,
    rng: StreamRng,
}

impl BlockedStream {
    pub fn new(seed: u64, tag: u64, index: u64) -> Self {
        Self {
            seed,
            tag,
            index,
            position: 0,
            block: 0,
            rng: StreamRng::seed_from_u64(derive_seed(seed, tag, index, 0)),
        }
    }

    /// Generator for a group of `len` elements starting at the current
    /// position. The group is drawn from the block containing its first
    /// element.
    pub fn group(&mut self, len: usize) -> &mut StreamRng {
        let block = (self.position / BLOCK_LEN) as u64;
        if block != self.block {
            self.block = block;
            self.rng =
                StreamRng::seed_from_u64(derive_seed(self.seed, self.tag, self.index, block));
        }
        self.position += len;
        &mut self.rng
    }

    pub fn position(&self) -> usize {
        self.position
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, never on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

//! Counter-based random streams.
//!
//! Every value is a pure function of `(seed, stream, counter)`: the stream key
//! is derived from the master seed and the stream id, and the `n`-th raw word
//! is the SplitMix64 finalizer applied to `key + n * GOLDEN`. A particle owns
//! one stream, so the numbers it consumes never depend on how particles are
//! scheduled across threads.

use rand_core::{impls, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MUL: u64 = 0xD1B5_4A32_D192_ED03;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of a random stream: master seed plus stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::new(self.seed, self.stream)
    }
}

/// Stream ids at the top of the id space are reserved for non-particle use.
pub mod streams {
    /// Random initialization of model parameters.
    pub const THETA_INIT: u64 = u64::MAX - 1;
    /// Mini-batch index selection.
    pub const BATCH: u64 = u64::MAX - 2;
    /// Evaluation samples (e.g. for Wasserstein metrics).
    pub const EVAL: u64 = u64::MAX - 3;
    /// Synthetic dataset generation.
    pub const DATA: u64 = u64::MAX - 4;
}

/// A seekable counter-based generator for one stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        // The inner map is injective in `stream` for a fixed seed and `mix64`
        // is a bijection, so distinct streams get distinct keys.
        let key = mix64(
            mix64(seed ^ 0x6A09_E667_F3BC_C909).wrapping_add(stream.wrapping_mul(STREAM_MUL)),
        );
        Self { key, counter: 0 }
    }

    /// Generator positioned at raw word `counter` of the stream.
    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        let mut rng = Self::new(seed, stream);
        rng.counter = counter;
        rng
    }

    /// Number of raw 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
    }

    #[inline(always)]
    fn word(&mut self) -> u64 {
        let z = self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN));
        self.counter = self.counter.wrapping_add(1);
        mix64(z)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Overwrites `out` with i.i.d. standard normal draws.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = StandardNormal.sample(self);
        }
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.word() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

/// `n` i.i.d. standard normal draws from the start of the addressed stream.
pub fn gaussian_draw(spec: RngSpec, n: usize) -> Vec<f64> {
    let mut rng = spec.rng();
    let mut out = vec![0.0; n];
    rng.fill_normal(&mut out);
    out
}

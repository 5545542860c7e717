//! Explicitly seeded, splittable random source.
//!
//! Every stochastic operation takes a `&mut SimRng`; there is no ambient
//! randomness anywhere in the crate. Child generators are derived with
//! [`SimRng::split`] (consumes parent output) or [`SimRng::stream`] (pure
//! function of seed and stream id), so per-party and per-trial generators
//! are reproducible from a single session seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn from_seed(seed: u64) -> Self {
        SimRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` of generator `seed`.
    pub fn stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SimRng(inner)
    }

    pub fn split(&mut self) -> SimRng {
        SimRng::from_seed(self.0.next_u64())
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, len: usize) -> usize {
        assert!(len > 0, "index into empty range");
        ((self.uniform() * len as f64) as usize).min(len - 1)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

//! Seed-indexed random streams.
//!
//! A stream is ChaCha8 keyed by the master seed, with the 64-bit ChaCha
//! stream id set to the substream index. Gaussian variates use the classic
//! Box–Muller transform; both outputs of each pair are used, cosine first.
//! Changing either choice changes every golden value downstream.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
    master_seed: u64,
    substream_index: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, substream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(substream_index);
        RandomStream {
            rng,
            spare: None,
            master_seed,
            substream_index,
        }
    }

    pub fn origin(&self) -> (u64, u64) {
        (self.master_seed, self.substream_index)
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn next_open_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_open_uniform();
        let u2 = self.next_open_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_standard_normal();
        }
    }
}

/// Draws `count` i.i.d. standard normal variates.
pub fn sample_standard_normal(stream: &mut RandomStream, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    stream.fill_standard_normal(&mut out);
    out
}

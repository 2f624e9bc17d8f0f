//! Seeded randomness.
//!
//! Every trial draws from its own ChaCha stream. The stream seed is derived
//! from the campaign master seed and a list of stream coordinates (trial
//! index, then optional tags such as scheme or SNR index) by folding each
//! coordinate through SplitMix64:
//!
//! ```text
//! state = splitmix64(master)
//! for c in coordinates { state = splitmix64(state ^ splitmix64(c)) }
//! ```
//!
//! Streams are therefore independent of execution order, and two runs with
//! the same master seed and coordinates produce bit-identical draws.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha12Rng;

/// Campaign master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Derive the seed of the stream addressed by `coords`.
    pub fn derive(self, coords: &[u64]) -> u64 {
        coords.iter().fold(splitmix64(self.0), |state, &c| {
            splitmix64(state ^ splitmix64(c))
        })
    }

    pub fn trial(self, trial: u64) -> u64 {
        self.derive(&[trial])
    }

    pub fn rng(self, coords: &[u64]) -> SimRng {
        SimRng::seed_from_u64(self.derive(coords))
    }
}

/// One SplitMix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian sample with total variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

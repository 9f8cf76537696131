//! Seeded random streams.
//!
//! All randomness in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`),
//! a counter-based generator whose output is identical on every platform.
//! A 64-bit experiment seed is split into independent child seeds with the
//! SplitMix64 finalizer, and each consumer (loss generation, perturbations,
//! interior sampling) draws from its own ChaCha stream so that adding draws in
//! one place never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream identifiers for the different consumers of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Losses = 0,
    Perturbation = 1,
    Sampling = 2,
    Probe = 3,
}

pub type StreamRng = ChaCha8Rng;

/// Open the ChaCha8 stream `stream` keyed by `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for trial `index` of experiment `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// Uniform direction on the unit sphere in `d` dimensions.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point in the Euclidean ball of the given radius.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    let dir = unit_direction(rng, d);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    dir.into_iter().map(|x| x * r).collect()
}

//! Path loss with Rayleigh fading.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

/// Squared channel magnitude at `distance` metres: `d^-exponent` times a
/// unit-mean exponential draw (the power of a Rayleigh amplitude).
pub fn sample_channel<R: Rng + ?Sized>(distance: f64, exponent: f64, rng: &mut R) -> f64 {
    let x: f64 = rng.sample(Exp1);
    path_loss(distance, exponent) * x
}

pub fn path_loss(distance: f64, exponent: f64) -> f64 {
    distance.powf(-exponent)
}

/// Generator for trial `trial` of a run seeded with `seed`. Each trial has
/// its own stream, so trials can be evaluated in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

//! Seeded weight initializers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kaiming-uniform with fan-in: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
pub fn kaiming_uniform(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f32> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n)
        .map(|_| ((rng.gen::<f64>() * 2.0 - 1.0) * bound) as f32)
        .collect()
}

/// Gaussian N(0, std^2) via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f32> {
    (0..n)
        .map(|_| {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (z * std) as f32
        })
        .collect()
}

pub fn zeros(n: usize) -> Vec<f32> {
    vec![0.0; n]
}

pub fn ones(n: usize) -> Vec<f32> {
    vec![1.0; n]
}

/// Deterministic stream for a named component.
pub fn seeded_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E3779B97F4A7C15))
}

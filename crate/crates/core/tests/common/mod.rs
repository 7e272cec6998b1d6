#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uotlab::{DiscreteMeasure, Entropy, Potential, PotentialClass};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the ball of radius `r`.
pub fn ball_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-r..=r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= r * r {
            return x;
        }
    }
}

/// `n` atoms in the unit ball with weights summing to `mass`.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, dim: usize, mass: f64) -> DiscreteMeasure {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| ball_point(rng, dim, 1.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let s: f64 = raw.iter().sum();
    DiscreteMeasure::new(&pts, raw.iter().map(|w| w * mass / s).collect()).unwrap()
}

pub fn random_quad_shift(rng: &mut ChaCha8Rng, dim: usize, lambda: f64, scale: f64, radius: f64) -> Potential {
    let a: Vec<f64> = ball_point(rng, dim, scale);
    let b = rng.random_range(-scale..=scale);
    Potential::quad_shift(lambda, &a, b, radius).unwrap()
}

pub fn random_max_quad(rng: &mut ChaCha8Rng, dim: usize, lambda: f64, pieces: usize, scale: f64, radius: f64) -> Potential {
    let parts: Vec<(Vec<f64>, f64)> = (0..pieces)
        .map(|_| (ball_point(rng, dim, scale), rng.random_range(-scale..=scale)))
        .collect();
    Potential::max_quad(lambda, &parts, radius).unwrap()
}

pub fn random_kl(rng: &mut ChaCha8Rng) -> Entropy {
    Entropy::kl(rng.random_range(0.5..2.0))
}

/// Support radius covering both measures.
pub fn radius_of(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    mu.max_norm().max(nu.max_norm()).max(1e-3)
}

pub fn quad_shift_class(dim: usize, lambda: f64, radius: f64) -> Arc<PotentialClass> {
    Arc::new(PotentialClass::quad_shift(dim, lambda, 1.0, 1.0, radius).unwrap())
}

/// A random problem whose optimal potential is a known `quad_shift`.
pub struct Consistent {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub z0: Potential,
    pub entropy: Entropy,
    pub radius: f64,
    pub lambda: f64,
}

pub fn consistent(rng: &mut ChaCha8Rng, n: usize, dim: usize, lambda: f64, e: Entropy) -> Consistent {
    let mass = rng.random_range(0.5..2.0);
    let mu = random_measure(rng, n, dim, mass);
    let a = ball_point(rng, dim, 0.3);
    let b = if e.is_balanced() { 0.0 } else { rng.random_range(-0.3..=0.3) };
    let probe = Potential::quad_shift(lambda, &a, b, 1.0).unwrap();
    let nu = uotlab::semidual::make_consistent_instance(&mu, &probe, &e).unwrap();
    let radius = radius_of(&mu, &nu);
    Consistent {
        z0: Potential::quad_shift(lambda, &a, b, radius).unwrap(),
        mu,
        nu,
        entropy: e,
        radius,
        lambda,
    }
}

//! Deterministic quasi-random phase-space samples.
//!
//! Points come from a Halton sequence with a seeded Cranley-Patterson
//! rotation, scaled to the box `[-r, r]^{2d}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A phase point `(q, p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSpec {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 128,
            radius: 2.0,
            seed: 0,
        }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `count` points of the rotated Halton sequence in `[0, 1)^dim`.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton: at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|j| (radical_inverse(i, PRIMES[j]) + shift[j]).fract())
                .collect()
        })
        .collect()
}

/// Quasi-random phase points of dimension `d` in `[-radius, radius]^{2d}`.
pub fn sample_box(d: usize, spec: SampleSpec) -> Vec<PhasePoint> {
    halton(2 * d, spec.count, spec.seed)
        .into_iter()
        .map(|u| {
            let x: Vec<f64> = u.iter().map(|v| spec.radius * (2.0 * v - 1.0)).collect();
            PhasePoint::new(x[..d].to_vec(), x[d..].to_vec())
        })
        .collect()
}

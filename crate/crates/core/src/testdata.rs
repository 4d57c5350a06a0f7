//! Reproducible random problems for the error and timing experiments.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TestData {
    pub fhat: Vec<Complex64>,
    /// `n, n-1, ..., 1`
    pub xi: Vec<f64>,
    /// angles in `[0, 1)`
    pub x: Vec<f64>,
    /// decreasing in `[0, (2q-1) ln 2]`
    pub y: Vec<f64>,
}

/// Largest spatial node drawn for order `q`, `(2q - 1) ln 2 = ln(1/eps)` for
/// `eps = 4^(1/2 - q)`.
pub fn max_y(q: usize) -> f64 {
    (2.0 * q as f64 - 1.0) * LN_2
}

/// Coefficients are uniform in `[0, 1)`, with an independent uniform
/// imaginary part when `complex` is set. Draw order is coefficients, angles,
/// then moduli, so the real problem is a prefix of the same stream.
pub fn gen_testdata(n: usize, q: usize, seed: u64, complex: bool) -> TestData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fhat = (0..n)
        .map(|_| {
            let re = rng.gen_range(0.0..1.0);
            let im = if complex { rng.gen_range(0.0..1.0) } else { 0.0 };
            Complex64::new(re, im)
        })
        .collect();
    let x = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let top = max_y(q);
    let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=top)).collect();
    y.sort_by(|a, b| b.total_cmp(a));
    let xi = (1..=n).rev().map(|k| k as f64).collect();
    TestData { fhat, xi, x, y }
}

impl TestData {
    /// `z_j = exp(-y_j) exp(2 pi i x_j)`.
    pub fn disk_nodes(&self) -> Vec<Complex64> {
        self.y
            .iter()
            .zip(&self.x)
            .map(|(&y, &x)| Complex64::from_polar((-y).exp(), 2.0 * PI * x))
            .collect()
    }
}

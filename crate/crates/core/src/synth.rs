//! Seeded synthetic sparse least-squares instances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseInstance {
    pub a: Matrix,
    pub b: Vector,
    pub x_true: Vector,
}

/// `b = A x_true + noise·N(0, I)` with `A` standard normal and `x_true` having
/// `sparsity` entries of ±1 at uniformly chosen positions.
pub fn sparse_least_squares(m: usize, n: usize, sparsity: usize, noise: f64, seed: u64) -> Result<SparseInstance> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m", "dimensions must be positive"));
    }
    if sparsity > n {
        return Err(Error::invalid("sparsity", format!("{sparsity} exceeds n = {n}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::invalid("noise", "must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let mut x_true = Vector::zeros(n);
    for i in sample(&mut rng, n, sparsity) {
        x_true[i] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let noise_dist = Normal::new(0.0, noise).map_err(|e| Error::invalid("noise", e.to_string()))?;
    let b = &a * &x_true + Vector::from_fn(m, |_, _| noise_dist.sample(&mut rng));
    Ok(SparseInstance { a, b, x_true })
}

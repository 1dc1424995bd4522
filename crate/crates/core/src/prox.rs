//! Weighted ℓ1 proximal step.
//!
//! The subproblem at `x^k` is
//!
//! ```text
//! min_x  gᵀ(x − x^k) + (β/2)‖x − x^k‖² + λ Σ w_i |x_i|
//! ```
//!
//! which is separable and solved by soft-thresholding `x^k − g/β` at `λw/β`.

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// `sign(v_i) · max(|v_i| − t_i, 0)`. Exact ties `|v_i| = t_i` map to zero.
pub fn weighted_soft_threshold(v: &Vector, t: &Vector) -> Result<Vector> {
    check_dim("t", v.len(), t.len())?;
    if let Some((index, &value)) = t.iter().enumerate().find(|(_, ti)| !(**ti >= 0.0)) {
        return Err(Error::NegativeThreshold { index, value });
    }
    Ok(v.zip_map(t, shrink))
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    let mag = v.abs() - t;
    if mag > 0.0 {
        mag.copysign(v)
    } else {
        0.0
    }
}

fn check_inputs(x: &Vector, g: &Vector, beta: f64, lambda: f64, w: &Vector) -> Result<()> {
    check_dim("g", x.len(), g.len())?;
    check_dim("w", x.len(), w.len())?;
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if w.iter().any(|wi| !(*wi > 0.0)) {
        return Err(Error::invalid("w", "weights must be positive"));
    }
    Ok(())
}

/// Minimizer of the linearized, weighted-ℓ1 subproblem.
pub fn subproblem_solve(x: &Vector, g: &Vector, beta: f64, lambda: f64, w: &Vector) -> Result<Vector> {
    check_inputs(x, g, beta, lambda, w)?;
    let scale = lambda / beta;
    Ok(Vector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| shrink(x[i] - g[i] / beta, scale * w[i])),
    ))
}

/// Subproblem objective measured relative to `x`, so its value at `x` is zero.
pub fn subproblem_objective(candidate: &Vector, x: &Vector, g: &Vector, beta: f64, lambda: f64, w: &Vector) -> f64 {
    let d = candidate - x;
    let l1 = |v: &Vector| v.iter().zip(w.iter()).map(|(vi, wi)| wi * vi.abs()).sum::<f64>();
    g.dot(&d) + 0.5 * beta * d.norm_squared() + lambda * (l1(candidate) - l1(x))
}

/// Violation of the subproblem's first-order condition
/// `g + β(x_new − x) + λ w∘ξ = 0`, `ξ ∈ ∂‖x_new‖₁`, as a max over coordinates.
///
/// Nonzero coordinates use the unique subgradient `sign(x_new_i)`; zero
/// coordinates report the distance of `−(g_i − βx_i)` to `[−λw_i, λw_i]`.
pub fn subproblem_optimality_residual(
    x_new: &Vector,
    x: &Vector,
    g: &Vector,
    beta: f64,
    lambda: f64,
    w: &Vector,
) -> f64 {
    (0..x_new.len())
        .map(|i| {
            let smooth = g[i] + beta * (x_new[i] - x[i]);
            let radius = lambda * w[i];
            if x_new[i] != 0.0 {
                (smooth + radius * x_new[i].signum()).abs()
            } else {
                ((-smooth).abs() - radius).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
